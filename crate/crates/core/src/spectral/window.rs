use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{invalid, Result};

pub const MIN_CHEB_LEN: usize = 16;
pub const MIN_CHEB_ATTEN_DB: f64 = 40.0;
/// Beyond this the sidelobe level is below what double precision resolves.
pub const MAX_CHEB_ATTEN_DB: f64 = 320.0;

/// Chebyshev polynomial of the first kind, `T_n(x)`, for any real `x`.
#[cfg(test)]
fn chebyshev_poly(order: f64, x: f64) -> f64 {
    if x.abs() <= 1.0 {
        (order * x.acos()).cos()
    } else if x > 1.0 {
        (order * x.acosh()).cosh()
    } else {
        let sign = if (order as u64).is_multiple_of(2) { 1.0 } else { -1.0 };
        sign * (order * (-x).acosh()).cosh()
    }
}

/// `T_order(cosh(β)·cos(θ))`.
///
/// For long windows `cosh β` sits within ~1e-8 of 1, so `x ∓ 1` is formed
/// from half-angle identities instead of by subtraction.
fn cheb_response(order: f64, beta: f64, theta: f64) -> f64 {
    let sb2 = 2.0 * (0.5 * beta).sinh().powi(2);
    let c = theta.cos();
    let x_minus_1 = sb2 * c - 2.0 * (0.5 * theta).sin().powi(2);
    let x_plus_1 = sb2 * c + 2.0 * (0.5 * theta).cos().powi(2);
    let acosh_1p = |d: f64| (d + (d * (d + 2.0)).sqrt()).ln_1p();
    if x_minus_1 > 0.0 {
        (order * acosh_1p(x_minus_1)).cosh()
    } else if x_plus_1 < 0.0 {
        let sign = if (order as u64).is_multiple_of(2) { 1.0 } else { -1.0 };
        sign * (order * acosh_1p(-x_plus_1)).cosh()
    } else {
        let angle = if x_minus_1 + x_plus_1 >= 0.0 {
            2.0 * (-0.5 * x_minus_1).sqrt().asin()
        } else {
            PI - 2.0 * (0.5 * x_plus_1).sqrt().asin()
        };
        (order * angle).cos()
    }
}

/// Symmetric Dolph-Chebyshev window of length `n` with equiripple sidelobes
/// `atten_db` below the main lobe, normalized to unit peak.
///
/// The window is the inverse DFT of its closed-form frequency response
/// `T_{n-1}(x0·cos(πk/n))`, with `x0 = cosh(acosh(10^{atten/20})/(n-1))`.
pub fn cheb_window(n: usize, atten_db: f64) -> Result<Vec<f64>> {
    if n < MIN_CHEB_LEN {
        return Err(invalid("n", format!("window length must be >= {MIN_CHEB_LEN}, got {n}")));
    }
    if !(MIN_CHEB_ATTEN_DB..=MAX_CHEB_ATTEN_DB).contains(&atten_db) {
        return Err(invalid(
            "atten_db",
            format!("attenuation must lie in [{MIN_CHEB_ATTEN_DB}, {MAX_CHEB_ATTEN_DB}] dB, got {atten_db}"),
        ));
    }
    let order = (n - 1) as f64;
    let beta = (10f64.powf(atten_db / 20.0)).acosh() / order;

    let mut spectrum: Vec<Complex64> = (0..n)
        .map(|k| {
            let v = cheb_response(order, beta, PI * k as f64 / n as f64);
            if n.is_multiple_of(2) {
                // Half-sample shift keeps the even-length window symmetric.
                Complex64::from_polar(v, PI * k as f64 / n as f64)
            } else {
                Complex64::new(v, 0.0)
            }
        })
        .collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut spectrum);

    let w: Vec<f64> = if n % 2 == 1 {
        let half = n.div_ceil(2);
        let head: Vec<f64> = spectrum[..half].iter().map(|c| c.re).collect();
        head[1..].iter().rev().chain(head.iter()).copied().collect()
    } else {
        let half = n / 2 + 1;
        let head: Vec<f64> = spectrum[..half].iter().map(|c| c.re).collect();
        head[1..].iter().rev().chain(head[1..].iter()).copied().collect()
    };
    let peak = w.iter().fold(0.0f64, |m, &x| m.max(x));
    Ok(w.iter().map(|x| x / peak).collect())
}

/// Power response `|W(f)|²` in dB relative to its peak, sampled on an
/// `oversample`-times zero-padded DFT grid (one-sided, normalized
/// frequency in cycles/sample).
pub fn window_response_db(window: &[f64], oversample: usize) -> Vec<(f64, f64)> {
    let len = window.len() * oversample.max(1);
    let mut buf: Vec<Complex64> = window.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    buf.resize(len, Complex64::new(0.0, 0.0));
    FftPlanner::new().plan_fft_forward(len).process(&mut buf);
    let power: Vec<f64> = buf[..len / 2 + 1].iter().map(|c| c.norm_sqr()).collect();
    let peak = power.iter().fold(0.0f64, |m, &x| m.max(x));
    power
        .iter()
        .enumerate()
        .map(|(i, &p)| (i as f64 / len as f64, 10.0 * (p / peak).max(1e-300).log10()))
        .collect()
}

/// Highest sidelobe (dB re peak) of a power response, found after the first
/// null following the main lobe.
pub fn peak_sidelobe_db(response: &[(f64, f64)]) -> f64 {
    let mut i = 1;
    while i < response.len() && response[i].1 <= response[i - 1].1 {
        i += 1;
    }
    response[i.saturating_sub(1)..]
        .iter()
        .map(|p| p.1)
        .fold(f64::NEG_INFINITY, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetric_and_unit_peak() {
        for n in [16, 17, 64, 101, 256] {
            let w = cheb_window(n, 80.0).unwrap();
            assert_eq!(w.len(), n);
            for k in 0..n {
                assert!((w[k] - w[n - 1 - k]).abs() < 1e-14, "n={n} k={k}");
            }
            let peak = w.iter().cloned().fold(f64::MIN, f64::max);
            assert!((peak - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn rejects_out_of_range() {
        assert!(cheb_window(8, 100.0).is_err());
        assert!(cheb_window(64, 20.0).is_err());
        assert!(cheb_window(64, 330.0).is_err());
    }

    #[test]
    fn equiripple_at_100db() {
        let w = cheb_window(64, 100.0).unwrap();
        let resp = window_response_db(&w, 64);
        // Skip the main lobe, then collect local maxima.
        let mut i = 1;
        while resp[i].1 <= resp[i - 1].1 {
            i += 1;
        }
        let peaks: Vec<f64> = (i..resp.len() - 1)
            .filter(|&k| resp[k].1 >= resp[k - 1].1 && resp[k].1 >= resp[k + 1].1)
            .map(|k| resp[k].1)
            .collect();
        assert!(peaks.len() > 10);
        for p in peaks {
            assert!((p + 100.0).abs() < 1.0, "sidelobe peak {p}");
        }
    }

    #[test]
    fn matches_small_odd_reference() {
        // Direct cosine-series evaluation of the same definition.
        let n = 31;
        let atten = 60.0;
        let order = (n - 1) as f64;
        let x0 = ((10f64.powf(atten / 20.0)).acosh() / order).cosh();
        let m = (n - 1) / 2;
        let mut direct: Vec<f64> = (0..n)
            .map(|i| {
                let t = i as f64 - m as f64;
                let s: f64 = (1..=m)
                    .map(|k| {
                        chebyshev_poly(order, x0 * (PI * k as f64 / n as f64).cos())
                            * (2.0 * PI * k as f64 * t / n as f64).cos()
                    })
                    .sum();
                10f64.powf(atten / 20.0) + 2.0 * s
            })
            .collect();
        let peak = direct.iter().cloned().fold(f64::MIN, f64::max);
        direct.iter_mut().for_each(|x| *x /= peak);
        let w = cheb_window(n, atten).unwrap();
        for (a, b) in w.iter().zip(&direct) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
    }
}
