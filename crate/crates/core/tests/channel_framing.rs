use std::f64::consts::PI;

use dualsync::channel::{sigma_from_snr, ChannelLeg, PILOT_COMPRESSION_GAIN_DB};
use dualsync::framing::{simulate_pilot_rx, wh_sequence, SuperframeLayout};
use dualsync::pll::wrap_phase;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const T: f64 = 956.0 / 8e6;

fn pilot_errors(snr_db: f64, n: usize, seed: u64) -> Vec<f64> {
    let seq = wh_sequence(3, 32).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let phase = rng.random_range(-PI..PI);
            wrap_phase(simulate_pilot_rx(phase, &seq, snr_db, &mut rng).arg() - phase)
        })
        .collect()
}

fn decimated_errors(snr_db: f64, n: usize, seed: u64) -> Vec<f64> {
    let sigma = sigma_from_snr(snr_db, PILOT_COMPRESSION_GAIN_DB);
    let leg = ChannelLeg::new(2.2e9, 0.0, 0.0, sigma, T).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let phase = rng.random_range(-PI..PI);
            let rx = leg.step(Complex64::from_polar(1.0, phase), 0, &mut rng);
            wrap_phase(rx.arg() - phase)
        })
        .collect()
}

fn variance(x: &[f64]) -> f64 {
    let m = x.iter().sum::<f64>() / x.len() as f64;
    x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / x.len() as f64
}

/// Two-sample Kolmogorov-Smirnov statistic and its asymptotic p-value.
fn ks_two_sample(a: &[f64], b: &[f64]) -> (f64, f64) {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (n, m) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    let en = (n * m / (n + m)).sqrt();
    let lambda = (en + 0.12 + 0.11 / en) * d;
    let p: f64 = (1..=100)
        .map(|k| {
            let k = k as f64;
            let sign = if k as u64 % 2 == 1 { 1.0 } else { -1.0 };
            2.0 * sign * (-2.0 * k * k * lambda * lambda).exp()
        })
        .sum();
    (d, p.clamp(0.0, 1.0))
}

#[test]
fn pilot_and_decimated_noise_are_indistinguishable() {
    for (snr, seed) in [(0.0, 1u64), (10.0, 2)] {
        let a = pilot_errors(snr, 10_000, seed);
        let b = decimated_errors(snr, 10_000, seed + 100);
        let (d, p) = ks_two_sample(&a, &b);
        assert!(p > 0.01, "snr {snr}: D = {d}, p = {p}");
    }
}

#[test]
fn ks_statistic_detects_a_scale_change() {
    let a = decimated_errors(10.0, 10_000, 5);
    let b = decimated_errors(8.0, 10_000, 6);
    assert!(ks_two_sample(&a, &b).1 < 0.01);
}

#[test]
fn pilot_error_spread_matches_decimated_model() {
    let a = pilot_errors(10.0, 100_000, 7);
    let b = decimated_errors(10.0, 100_000, 8);
    let ratio = variance(&a).sqrt() / variance(&b).sqrt();
    assert!((ratio - 1.0).abs() < 0.05, "std ratio {ratio}");
}

#[test]
fn error_variance_scales_with_noise_power() {
    let low = variance(&pilot_errors(0.0, 100_000, 9));
    let high = variance(&pilot_errors(20.0, 100_000, 10));
    let ratio = low / high;
    assert!((ratio / 100.0 - 1.0).abs() < 0.1, "ratio {ratio}");
}

#[test]
fn correlation_gain_of_thirty_two_symbols() {
    let layout = SuperframeLayout::default();
    let seq = wh_sequence(0, 32).unwrap();
    let snr_db = 5.0;
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let n = 100_000;
    let mut out_power = 0.0;
    for _ in 0..n {
        let phase = rng.random_range(-PI..PI);
        let z = simulate_pilot_rx(phase, &seq, snr_db, &mut rng);
        out_power += (z - Complex64::from_polar(1.0, phase)).norm_sqr();
    }
    let in_power = 10f64.powf(-snr_db / 10.0);
    let gain = 10.0 * (in_power / (out_power / n as f64)).log10();
    assert!((gain - layout.compression_gain_db()).abs() < 0.3, "gain {gain}");
    assert!((gain - 15.05).abs() < 0.3);
}

#[test]
fn leg_noise_streams_are_uncorrelated() {
    let sigma = 0.5;
    let leg = ChannelLeg::new(2.2e9, 0.0, 0.0, sigma, T).unwrap();
    let streams: Vec<Vec<Complex64>> = (2..6u64)
        .map(|stream| {
            let mut rng = ChaCha8Rng::seed_from_u64(1);
            rng.set_stream(stream);
            let one = Complex64::new(1.0, 0.0);
            (0..1_000_000).map(|_| leg.step(one, 0, &mut rng) - one).collect()
        })
        .collect();
    let n = streams[0].len() as f64;
    let bound = 3.0 / n.sqrt();
    for i in 0..4 {
        for j in i + 1..4 {
            let c: Complex64 = streams[i].iter().zip(&streams[j]).map(|(a, b)| a * b.conj()).sum();
            let rho = c.norm() / (n * sigma * sigma);
            assert!(rho < bound, "legs {i},{j}: {rho} vs {bound}");
        }
    }
}
