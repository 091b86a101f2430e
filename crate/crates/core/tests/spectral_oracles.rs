use std::f64::consts::TAU;

use dualsync::spectral::{cheb_window, peak_sidelobe_db, psd_estimate, window_response_db, PsdConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

const FS: f64 = 8e6 / 956.0;

fn white(n: usize, sigma: f64, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = Normal::new(0.0, sigma).unwrap();
    (0..n).map(|_| d.sample(&mut rng)).collect()
}

fn cfg(block_len: usize, n_blocks: usize) -> PsdConfig {
    PsdConfig {
        block_len,
        n_blocks,
        window_atten_db: 300.0,
        remove_mean: false,
    }
}

#[test]
fn white_noise_level_matches_analytic() {
    let sigma = 0.01;
    let c = cfg(1 << 14, 32);
    let x = white(c.required_samples(), sigma, 1);
    let est = psd_estimate(&x, FS, &c).unwrap();
    let want = 10.0 * (sigma * sigma / FS).log10();
    for (lo, hi) in [(10.0, 100.0), (100.0, 1000.0), (1000.0, 4000.0)] {
        let got = est.band_level_db(lo, hi);
        assert!((got - want).abs() < 0.5, "{lo}-{hi} Hz: {got} vs {want}");
    }
}

#[test]
fn integrated_power_equals_variance() {
    let sigma = 0.3;
    let c = cfg(1 << 12, 64);
    let x = white(c.required_samples(), sigma, 2);
    let est = psd_estimate(&x, FS, &c).unwrap();
    let total = est.integrated_phase_power(0.0, FS / 2.0);
    let var = x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64;
    assert!((total / var - 1.0).abs() < 0.01, "{total} vs {var}");
}

#[test]
fn sinusoid_power_is_recovered() {
    let a = 0.2;
    let c = cfg(1 << 12, 16);
    let bin = 300.0;
    let f0 = bin * FS / c.block_len as f64;
    let x: Vec<f64> = (0..c.required_samples())
        .map(|n| a * (TAU * f0 * n as f64 / FS).sin())
        .collect();
    let est = psd_estimate(&x, FS, &c).unwrap();
    let df = est.bin_width_hz();
    let power = est.integrated_phase_power(f0 - 30.0 * df, f0 + 30.0 * df);
    assert!((power / (a * a / 2.0) - 1.0).abs() < 0.05, "{power}");
}

#[test]
fn chebyshev_sidelobes_are_equiripple_and_deep() {
    for (n, atten) in [(1024, 100.0), (4096, 300.0), (1 << 17, 300.0)] {
        let w = cheb_window(n, atten).unwrap();
        assert!(w.iter().zip(w.iter().rev()).all(|(a, b)| (a - b).abs() < 1e-12));
        let side = peak_sidelobe_db(&window_response_db(&w, 8));
        if atten < 200.0 {
            assert!((side + atten).abs() < 0.5, "{n}: {side}");
        } else {
            assert!(side <= -280.0, "{n}: {side}");
        }
    }
}

fn relative_spread(n_blocks: usize, seed: u64) -> f64 {
    let c = cfg(1 << 10, n_blocks);
    let x = white(c.required_samples(), 1.0, seed);
    let est = psd_estimate(&x, FS, &c).unwrap();
    // Skip the main lobe around DC and the band edge.
    let lin: Vec<f64> = est.levels_dbc_hz[20..500].iter().map(|l| 10f64.powf(l / 10.0)).collect();
    let m = lin.iter().sum::<f64>() / lin.len() as f64;
    (lin.iter().map(|v| (v - m).powi(2)).sum::<f64>() / lin.len() as f64).sqrt() / m
}

#[test]
fn doubling_blocks_shrinks_spread_by_root_two() {
    let ratio = relative_spread(16, 5) / relative_spread(32, 6);
    assert!((ratio / 2f64.sqrt() - 1.0).abs() < 0.2, "ratio {ratio}");
}
