use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;

use crate::error::{invalid, Error, Result};

use super::window::cheb_window;

/// Keeps every `factor`-th sample starting at index 0.
pub fn decimate(series: &[f64], factor: usize) -> Result<Vec<f64>> {
    if factor == 0 {
        return Err(invalid("factor", "decimation factor must be >= 1"));
    }
    Ok(series.iter().step_by(factor).copied().collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsdConfig {
    pub block_len: usize,
    pub n_blocks: usize,
    pub window_atten_db: f64,
    /// Subtract each block's mean before windowing. Off by default.
    pub remove_mean: bool,
}

impl Default for PsdConfig {
    fn default() -> Self {
        Self {
            block_len: 1 << 17,
            n_blocks: 32,
            window_atten_db: 300.0,
            remove_mean: false,
        }
    }
}

impl PsdConfig {
    pub fn required_samples(&self) -> usize {
        self.block_len * self.n_blocks
    }
}

/// One-sided phase-noise estimate. Levels are `L(f) = S_φ(f)/2` in dBc/Hz.
#[derive(Debug, Clone, PartialEq)]
pub struct PsdEstimate {
    pub freqs_hz: Vec<f64>,
    pub levels_dbc_hz: Vec<f64>,
    pub block_len: usize,
    pub n_blocks: usize,
    pub window_atten_db: f64,
    pub fs_hz: f64,
}

impl PsdEstimate {
    pub fn bin_width_hz(&self) -> f64 {
        self.fs_hz / self.block_len as f64
    }

    fn bin_of(&self, offset_hz: f64) -> usize {
        ((offset_hz / self.bin_width_hz()).round() as usize).min(self.freqs_hz.len() - 1)
    }

    /// Level of the bin nearest to `offset_hz`.
    pub fn level_at(&self, offset_hz: f64) -> f64 {
        self.levels_dbc_hz[self.bin_of(offset_hz)]
    }

    /// Mean level (averaged in linear units) over `[lo_hz, hi_hz]`.
    pub fn band_level_db(&self, lo_hz: f64, hi_hz: f64) -> f64 {
        let (a, b) = (self.bin_of(lo_hz), self.bin_of(hi_hz));
        let sum: f64 = self.levels_dbc_hz[a..=b].iter().map(|l| 10f64.powf(l / 10.0)).sum();
        10.0 * (sum / (b - a + 1) as f64).log10()
    }

    /// `∫ S_φ df` over `[lo_hz, hi_hz]` in rad² (twice the integral of `L`).
    pub fn integrated_phase_power(&self, lo_hz: f64, hi_hz: f64) -> f64 {
        let (a, b) = (self.bin_of(lo_hz), self.bin_of(hi_hz));
        let df = self.bin_width_hz();
        self.levels_dbc_hz[a..=b]
            .iter()
            .map(|l| 2.0 * 10f64.powf(l / 10.0) * df)
            .sum()
    }
}

/// Averaged periodogram over non-overlapping Dolph-Chebyshev-windowed blocks.
pub fn psd_estimate(samples: &[f64], fs_hz: f64, cfg: &PsdConfig) -> Result<PsdEstimate> {
    if cfg.block_len < 16 {
        return Err(invalid("block_len", "must be >= 16"));
    }
    let window = cheb_window(cfg.block_len, cfg.window_atten_db)?;
    psd_estimate_with_window(samples, fs_hz, cfg, &window)
}

pub fn psd_estimate_with_window(
    samples: &[f64],
    fs_hz: f64,
    cfg: &PsdConfig,
    window: &[f64],
) -> Result<PsdEstimate> {
    if !(fs_hz > 0.0 && fs_hz.is_finite()) {
        return Err(invalid("fs_hz", "must be > 0"));
    }
    if cfg.n_blocks == 0 {
        return Err(invalid("n_blocks", "must be >= 1"));
    }
    if window.len() != cfg.block_len {
        return Err(Error::LengthMismatch {
            expected: cfg.block_len,
            actual: window.len(),
        });
    }
    let required = cfg.required_samples();
    if samples.len() < required {
        return Err(Error::InsufficientSamples {
            required,
            available: samples.len(),
        });
    }
    let n = cfg.block_len;
    let fft = FftPlanner::new().plan_fft_forward(n);
    let blocks: Vec<Vec<f64>> = samples[..required]
        .par_chunks_exact(n)
        .map(|block| {
            let mean = if cfg.remove_mean {
                block.iter().sum::<f64>() / n as f64
            } else {
                0.0
            };
            let mut buf: Vec<Complex64> = block
                .iter()
                .zip(window)
                .map(|(&x, &w)| Complex64::new((x - mean) * w, 0.0))
                .collect();
            fft.process(&mut buf);
            buf[..n / 2].iter().map(|c| c.norm_sqr()).collect()
        })
        .collect();

    let mut acc = vec![0.0; n / 2];
    for b in &blocks {
        for (a, p) in acc.iter_mut().zip(b) {
            *a += p;
        }
    }
    let window_power: f64 = window.iter().map(|w| w * w).sum();
    // Two-sided density of φ equals L(f) = S_φ/2 for the one-sided S_φ.
    let norm = 1.0 / (cfg.n_blocks as f64 * fs_hz * window_power);
    let levels_dbc_hz = acc
        .iter()
        .map(|&p| 10.0 * (p * norm).max(f64::MIN_POSITIVE).log10())
        .collect();
    let freqs_hz = (0..n / 2).map(|k| k as f64 * fs_hz / n as f64).collect();
    Ok(PsdEstimate {
        freqs_hz,
        levels_dbc_hz,
        block_len: n,
        n_blocks: cfg.n_blocks,
        window_atten_db: cfg.window_atten_db,
        fs_hz,
    })
}
