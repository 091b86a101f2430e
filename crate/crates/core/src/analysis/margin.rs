//! Delay margin of the dual-carrier loop.
//!
//! The loop closes through `1 − G_c·G_s·H²`, i.e. a negative-feedback loop
//! with open-loop gain `−G_c·G_s·H²`. With `H² = e^{-sτ}` the margin is the
//! round-trip delay that eats the phase distance from `∠(−G_c·G_s)` down to
//! −180° at a unity-gain crossing, taken over all crossings.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;

use crate::error::{invalid, Result};
use crate::pll::{closed_tf, LoopConfig};

use super::loops::gc_tf;
use super::tf::TransferFunction;

/// Speed of light in vacuum (m/s).
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DelayMargin {
    /// Round-trip delay budget in seconds.
    Finite(f64),
    /// The open-loop gain never crosses unity.
    Infinite,
}

impl DelayMargin {
    pub fn seconds(self) -> f64 {
        match self {
            DelayMargin::Finite(s) => s,
            DelayMargin::Infinite => f64::INFINITY,
        }
    }

    /// Node separation whose round trip equals the margin.
    pub fn one_way_distance_m(self) -> f64 {
        0.5 * SPEED_OF_LIGHT * self.seconds()
    }
}

/// Negative-feedback open loop `−G_c(s)·G_s(s)` for two second-order PLLs (ω in rad/s).
pub fn open_loop(zeta_m: f64, omega_m: f64, zeta_s: f64, omega_s: f64) -> Result<TransferFunction> {
    // The tick period is irrelevant for the continuous-domain closure.
    let gm = closed_tf(&LoopConfig::new(zeta_m, omega_m, 1.0)?);
    let gs = closed_tf(&LoopConfig::new(zeta_s, omega_s, 1.0)?);
    Ok(-(gc_tf(&gm.into()) * TransferFunction::from(gs)))
}

/// Round-trip delay margin for natural frequencies in rad/s.
pub fn delay_margin(zeta_m: f64, omega_m: f64, zeta_s: f64, omega_s: f64) -> Result<DelayMargin> {
    let loop_tf = open_loop(zeta_m, omega_m, zeta_s, omega_s)?;
    let excess = |w: f64| loop_tf.eval(Complex64::new(0.0, w)).norm() - 1.0;

    let lo = omega_m.min(omega_s) * 1e-4;
    let hi = omega_m.max(omega_s) * 1e4;
    const N: usize = 8000;
    let grid: Vec<f64> = (0..=N)
        .map(|i| lo * (hi / lo).powf(i as f64 / N as f64))
        .collect();

    let mut best: Option<f64> = None;
    let mut prev = (grid[0], excess(grid[0]));
    for &w in &grid[1..] {
        let cur = (w, excess(w));
        if prev.1 == 0.0 || prev.1.signum() != cur.1.signum() {
            let wc = bisect(&excess, prev.0, cur.0);
            let phase = loop_tf.eval(Complex64::new(0.0, wc)).arg();
            // Phase distance down to −π, folded into [0, 2π).
            let distance = (phase + PI).rem_euclid(TAU);
            let tau = distance / wc;
            best = Some(best.map_or(tau, |b| b.min(tau)));
        }
        prev = cur;
    }
    Ok(best.map_or(DelayMargin::Infinite, DelayMargin::Finite))
}

fn bisect(f: &impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let fa = f(a);
    for _ in 0..200 {
        let m = (a * b).sqrt();
        let fm = f(m);
        if fm == 0.0 {
            return m;
        }
        if fm.signum() == fa.signum() {
            a = m;
        } else {
            b = m;
        }
        if (b - a) <= 1e-15 * b {
            break;
        }
    }
    (a * b).sqrt()
}

/// One row per natural frequency (both loops share it).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarginPoint {
    pub omega_n_hz: f64,
    pub margin: DelayMargin,
}

/// Delay margin with `ω_m = ω_s` swept over `freqs_hz`, converting with `to_rad`.
pub fn margin_sweep(
    zeta: f64,
    freqs_hz: &[f64],
    to_rad: impl Fn(f64) -> f64,
) -> Result<Vec<MarginPoint>> {
    if !(zeta > 0.0) {
        return Err(invalid("zeta", "must be > 0"));
    }
    freqs_hz
        .iter()
        .map(|&f| {
            let w = to_rad(f);
            Ok(MarginPoint {
                omega_n_hz: f,
                margin: delay_margin(zeta, w, zeta, w)?,
            })
        })
        .collect()
}
