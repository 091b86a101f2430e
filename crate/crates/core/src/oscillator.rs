//! Two-state oscillator phase-noise model.
//!
//! The model drives a frequency accumulator and a phase accumulator with
//! white Gaussian noise and adds a white phase term on the output:
//!
//! ```text
//! freq  += σ2·g2
//! phase += freq + σ1·g1
//! out    = phase + σ0·g0
//! ```
//!
//! For offsets well below the tick rate `fs` the single-sideband phase noise
//! `L(f) = S_φ(f)/2` of that process is `a0 + a2/f² + a4/f⁴` with
//!
//! ```text
//! a0 = σ0²/fs
//! a2 = σ1²·fs/(4π²)
//! a4 = σ2²·fs³/(16π⁴)
//! ```
//!
//! which is how masks in dBc/Hz are turned into per-tick intensities.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{invalid, Error, Result};

/// Largest deviation between a fitted model and any mask point.
pub const FIT_TOLERANCE_DB: f64 = 3.0;

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseMask {
    /// Carrier at which the mask is specified.
    pub reference_freq_hz: f64,
    /// `(offset_hz, level_dbc_per_hz)`, offsets strictly increasing.
    pub points: Vec<(f64, f64)>,
}

impl NoiseMask {
    pub fn new(reference_freq_hz: f64, points: Vec<(f64, f64)>) -> Result<Self> {
        if !(reference_freq_hz > 0.0 && reference_freq_hz.is_finite()) {
            return Err(invalid("mask_ref_hz", "reference frequency must be positive"));
        }
        if points.is_empty() {
            return Err(invalid("mask", "at least one point is required"));
        }
        for (i, &(f, l)) in points.iter().enumerate() {
            if !(f > 0.0 && f.is_finite()) {
                return Err(invalid("mask", format!("offset {f} must be positive and finite")));
            }
            if !l.is_finite() {
                return Err(invalid("mask", format!("level at {f} Hz must be finite")));
            }
            if i > 0 && f <= points[i - 1].0 {
                return Err(invalid("mask", "offsets must be strictly increasing"));
            }
        }
        Ok(Self {
            reference_freq_hz,
            points,
        })
    }

    /// Master reference oscillator: chip-scale atomic clock grade at 10 MHz.
    pub fn master_default() -> Self {
        Self::new(10e6, vec![(1.0, -85.0), (10.0, -125.0), (10e3, -160.0)]).expect("valid mask")
    }

    /// Follower reference oscillator: commercial OCXO grade at 10 MHz.
    pub fn follower_default() -> Self {
        Self::new(10e6, vec![(1.0, -70.0), (10.0, -100.0), (10e3, -140.0)]).expect("valid mask")
    }

    fn decades(&self) -> f64 {
        let lo = self.points.first().map(|p| p.0).unwrap_or(1.0);
        let hi = self.points.last().map(|p| p.0).unwrap_or(1.0);
        (hi / lo).log10()
    }
}

/// Power-law coefficients of `L(f) = a0 + a2/f² + a4/f⁴` in linear units (1/Hz).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PowerLawCoeffs {
    pub a0: f64,
    pub a2: f64,
    pub a4: f64,
}

impl PowerLawCoeffs {
    pub fn level(&self, offset_hz: f64) -> f64 {
        let f2 = offset_hz * offset_hz;
        self.a0 + self.a2 / f2 + self.a4 / (f2 * f2)
    }

    pub fn level_dbc_hz(&self, offset_hz: f64) -> f64 {
        10.0 * self.level(offset_hz).log10()
    }

    /// Coefficients after multiplying the phase by `ratio`.
    pub fn scaled(&self, ratio: f64) -> Self {
        let r2 = ratio * ratio;
        Self {
            a0: self.a0 * r2,
            a2: self.a2 * r2,
            a4: self.a4 * r2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoStateParams {
    /// Additive white phase noise per tick (rad).
    pub sigma0: f64,
    /// Phase-walk drive per tick (rad).
    pub sigma1: f64,
    /// Frequency-walk drive per tick (rad/tick).
    pub sigma2: f64,
    pub tick_rate_hz: f64,
}

impl TwoStateParams {
    pub fn new(sigma0: f64, sigma1: f64, sigma2: f64, tick_rate_hz: f64) -> Result<Self> {
        for (name, v) in [("sigma0", sigma0), ("sigma1", sigma1), ("sigma2", sigma2)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(invalid(name, format!("must be finite and >= 0, got {v}")));
            }
        }
        if !(tick_rate_hz > 0.0 && tick_rate_hz.is_finite()) {
            return Err(invalid("tick_rate_hz", "must be > 0"));
        }
        Ok(Self {
            sigma0,
            sigma1,
            sigma2,
            tick_rate_hz,
        })
    }

    /// A noiseless clock.
    pub fn ideal(tick_rate_hz: f64) -> Self {
        Self {
            sigma0: 0.0,
            sigma1: 0.0,
            sigma2: 0.0,
            tick_rate_hz,
        }
    }

    pub fn is_ideal(&self) -> bool {
        self.sigma0 == 0.0 && self.sigma1 == 0.0 && self.sigma2 == 0.0
    }

    pub fn from_coeffs(c: &PowerLawCoeffs, tick_rate_hz: f64) -> Result<Self> {
        let fs = tick_rate_hz;
        Self::new(
            (c.a0 * fs).sqrt(),
            2.0 * PI * (c.a2 / fs).sqrt(),
            4.0 * PI * PI * (c.a4 / (fs * fs * fs)).sqrt(),
            fs,
        )
    }

    pub fn coeffs(&self) -> PowerLawCoeffs {
        let fs = self.tick_rate_hz;
        PowerLawCoeffs {
            a0: self.sigma0 * self.sigma0 / fs,
            a2: self.sigma1 * self.sigma1 * fs / (4.0 * PI * PI),
            a4: self.sigma2 * self.sigma2 * fs * fs * fs / (16.0 * PI.powi(4)),
        }
    }

    /// Same low-frequency spectrum synthesized at a different tick rate.
    pub fn resampled(&self, tick_rate_hz: f64) -> Result<Self> {
        Self::from_coeffs(&self.coeffs(), tick_rate_hz)
    }
}

/// Nonnegative least-squares fit of the power-law model to a mask,
/// weighting each point by its own level so every point counts equally in
/// relative terms.
pub fn fit_power_law(mask: &NoiseMask) -> Result<PowerLawCoeffs> {
    let n = mask.points.len();
    // Each term needs a decade of support; fewer points or a narrow span
    // restrict the fit to smaller subsets of power laws.
    let max_terms = if n >= 3 && mask.decades() >= 3.0 - 1e-9 { 3 } else { n.clamp(1, 2) };

    let targets: Vec<f64> = mask.points.iter().map(|p| 10f64.powf(p.1 / 10.0)).collect();
    let basis = |f: f64, term: usize| f.powi(-2 * term as i32);

    let mut best: Option<(f64, usize, [f64; 3])> = None;
    for subset in 1u32..8 {
        let terms: Vec<usize> = (0..3).filter(|t| subset & (1 << t) != 0).collect();
        if terms.len() > max_terms {
            continue;
        }
        let rows: Vec<Vec<f64>> = mask
            .points
            .iter()
            .zip(&targets)
            .map(|(p, &t)| terms.iter().map(|&k| basis(p.0, k) / t).collect())
            .collect();
        let Some(sol) = least_squares_unit_rhs(&rows) else {
            continue;
        };
        if sol.iter().any(|&a| a < 0.0) {
            continue;
        }
        let mut coeffs = [0.0; 3];
        for (&k, &a) in terms.iter().zip(&sol) {
            coeffs[k] = a;
        }
        let residual: f64 = rows
            .iter()
            .map(|r| {
                let m: f64 = r.iter().zip(&sol).map(|(x, a)| x * a).sum();
                (m - 1.0).powi(2)
            })
            .sum();
        let better = match best {
            None => true,
            Some((r, len, _)) => {
                if residual < r - 1e-12 {
                    true
                } else {
                    residual <= r + 1e-12 && terms.len() < len
                }
            }
        };
        if better {
            best = Some((residual, terms.len(), coeffs));
        }
    }

    let (_, _, c) = best.ok_or(Error::SingularModel)?;
    let coeffs = PowerLawCoeffs {
        a0: c[0],
        a2: c[1],
        a4: c[2],
    };

    let worst = mask
        .points
        .iter()
        .map(|&(f, l)| (f, l, coeffs.level_dbc_hz(f)))
        .max_by(|a, b| (a.1 - a.2).abs().total_cmp(&(b.1 - b.2).abs()))
        .expect("mask has points");
    if !((worst.1 - worst.2).abs() <= FIT_TOLERANCE_DB) {
        return Err(Error::FitResidual {
            offset_hz: worst.0,
            mask_dbc_hz: worst.1,
            model_dbc_hz: worst.2,
        });
    }
    Ok(coeffs)
}

pub fn fit_two_state(mask: &NoiseMask, tick_rate_hz: f64) -> Result<TwoStateParams> {
    TwoStateParams::from_coeffs(&fit_power_law(mask)?, tick_rate_hz)
}

/// Solves `min ‖A·x − 1‖` by Householder QR after normalizing columns.
fn least_squares_unit_rhs(rows: &[Vec<f64>]) -> Option<Vec<f64>> {
    let m = rows.len();
    let n = rows.first()?.len();
    if n == 0 || m < n {
        return None;
    }
    let mut a: Vec<Vec<f64>> = rows.to_vec();
    let scale: Vec<f64> = (0..n)
        .map(|j| a.iter().map(|r| r[j] * r[j]).sum::<f64>().sqrt())
        .collect();
    if scale.iter().any(|&s| s == 0.0 || !s.is_finite()) {
        return None;
    }
    for r in a.iter_mut() {
        for j in 0..n {
            r[j] /= scale[j];
        }
    }
    let mut b = vec![1.0; m];
    for k in 0..n {
        let norm: f64 = (k..m).map(|i| a[i][k] * a[i][k]).sum::<f64>().sqrt();
        if norm < 1e-12 {
            return None;
        }
        let alpha = if a[k][k] > 0.0 { -norm } else { norm };
        let mut v: Vec<f64> = (k..m).map(|i| a[i][k]).collect();
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|x| x * x).sum();
        if vnorm2 == 0.0 {
            continue;
        }
        for j in k..n {
            let dot: f64 = (k..m).map(|i| v[i - k] * a[i][j]).sum();
            let f = 2.0 * dot / vnorm2;
            for i in k..m {
                a[i][j] -= f * v[i - k];
            }
        }
        let dot: f64 = (k..m).map(|i| v[i - k] * b[i]).sum();
        let f = 2.0 * dot / vnorm2;
        for i in k..m {
            b[i] -= f * v[i - k];
        }
    }
    let mut x = vec![0.0; n];
    for k in (0..n).rev() {
        let s: f64 = (k + 1..n).map(|j| a[k][j] * x[j]).sum();
        x[k] = (b[k] - s) / a[k][k];
    }
    Some(x.iter().zip(&scale).map(|(v, s)| v / s).collect())
}

/// Oscillator phase state. Phase is unwrapped.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoStateClock {
    pub phase: f64,
    pub freq_state: f64,
    pub params: TwoStateParams,
}

impl TwoStateClock {
    pub fn new(params: TwoStateParams) -> Self {
        Self {
            phase: 0.0,
            freq_state: 0.0,
            params,
        }
    }

    /// One tick with explicit unit-normal draws `[g0, g1, g2]`; returns the
    /// emitted phase sample.
    pub fn step_with(&mut self, g: [f64; 3]) -> f64 {
        let p = &self.params;
        self.freq_state += p.sigma2 * g[2];
        self.phase += self.freq_state + p.sigma1 * g[1];
        self.phase + p.sigma0 * g[0]
    }

    pub fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) -> f64 {
        let g = [
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
        ];
        self.step_with(g)
    }

    /// Advances `ticks` ticks at once and returns the emitted sample at the
    /// last one. The joint Gaussian law of the accumulated increments is
    /// sampled directly, so the result has exactly the distribution of
    /// `ticks` calls to [`step`](Self::step) (the intermediate white terms
    /// are never observed).
    pub fn advance<R: Rng + ?Sized>(&mut self, ticks: u64, rng: &mut R) -> f64 {
        if ticks == 0 {
            return self.phase;
        }
        if ticks == 1 {
            return self.step(rng);
        }
        let k = ticks as f64;
        let z: [f64; 4] = [
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
        ];
        // A = Σ g2_i, B = Σ (k − i + 1)·g2_i.
        let l11 = k.sqrt();
        let l21 = 0.5 * (k + 1.0) * k.sqrt();
        let l22 = (k * (k + 1.0) * (k - 1.0) / 12.0).sqrt();
        let a = l11 * z[0];
        let b = l21 * z[0] + l22 * z[1];
        let p = self.params;
        self.phase += k * self.freq_state + p.sigma2 * b + p.sigma1 * k.sqrt() * z[2];
        self.freq_state += p.sigma2 * a;
        self.phase + p.sigma0 * z[3]
    }
}

/// `n_samples` outputs of a fresh clock, one every `substeps` ticks.
pub fn synthesize<R: Rng + ?Sized>(
    params: TwoStateParams,
    n_samples: usize,
    substeps: u64,
    rng: &mut R,
) -> Vec<f64> {
    let mut clock = TwoStateClock::new(params);
    (0..n_samples).map(|_| clock.advance(substeps, rng)).collect()
}

/// Multiplies every sample by `ratio` (frequency multiplication to RF).
pub fn scale_to_rf(series: &[f64], ratio: f64) -> Result<Vec<f64>> {
    if !(ratio > 0.0 && ratio.is_finite()) {
        return Err(invalid("ratio", format!("must be > 0, got {ratio}")));
    }
    Ok(series.iter().map(|x| x * ratio).collect())
}

/// PSD shift in dB caused by [`scale_to_rf`].
pub fn rf_gain_db(ratio: f64) -> f64 {
    20.0 * ratio.log10()
}
