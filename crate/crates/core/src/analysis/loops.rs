//! Closed-form transfer functions of the single-carrier and dual-carrier loops.

use crate::error::{Error, Result};

use super::tf::TransferFunction;

/// Transfer functions from the three exogenous phases (master reference
/// `θ_0`, follower oscillator `θ_x`, master loop oscillator `θ_m`) to the
/// two beamforming phases of the single-frequency full-duplex loop.
#[derive(Debug, Clone)]
pub struct SingleLoopTfs {
    pub f01: TransferFunction,
    pub fx1: TransferFunction,
    pub fm1: TransferFunction,
    pub f02: TransferFunction,
    pub fx2: TransferFunction,
    pub fm2: TransferFunction,
}

/// Labels for the inputs of [`SingleLoopTfs`]:
/// `θ_bf1 = θ_0·F01 + θ_x·Fx1 − θ_m·Fm1` and likewise for `θ_bf2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SingleLoopInput {
    Theta0,
    ThetaX,
    ThetaM,
}

/// The four closed-loop responses of the dual-carrier loop.
#[derive(Debug, Clone)]
pub struct DualLoopTfs {
    /// `θ_out/θ_0`.
    pub out_from_0: TransferFunction,
    /// `θ_out/θ_x`.
    pub out_from_x: TransferFunction,
    /// `θ_bf/θ_0`, the same object as `out_from_0`.
    pub bf_from_0: TransferFunction,
    /// `θ_bf/θ_x = (1 − G_s)/(1 − G_c·G_s·H²)`.
    pub bf_from_x: TransferFunction,
}

impl DualLoopTfs {
    pub fn named(&self) -> [(&'static str, &TransferFunction); 4] {
        [
            ("out_from_0", &self.out_from_0),
            ("out_from_x", &self.out_from_x),
            ("bf_from_0", &self.bf_from_0),
            ("bf_from_x", &self.bf_from_x),
        ]
    }
}

pub fn single_loop_tfs(
    gm: &TransferFunction,
    gs: &TransferFunction,
    h: &TransferFunction,
) -> Result<SingleLoopTfs> {
    let h2 = h * h;
    let den = gm * (1.0 - 2.0 * (h2 * gs)) - 2.0;
    if den.is_identically_zero() {
        return Err(Error::SingularModel);
    }
    let over = |n: TransferFunction| n / &den;
    Ok(SingleLoopTfs {
        f01: over(gm.clone()),
        fx1: over(2.0 * (gm * h) * (1.0 + gs.clone())),
        fm1: over(gm * (2.0 + gm.clone())),
        f02: over((3.0 * gm.clone() - 2.0) * h * gs),
        fx2: over((gm - 2.0) * (1.0 + gs.clone())),
        fm2: over(gm * h * gs * (2.0 + gm.clone())),
    })
}

/// Master block response `α/θ_r3 = −0.5·G_m/(1 − 0.5·G_m)`.
pub fn gc_tf(gm: &TransferFunction) -> TransferFunction {
    (-0.5 * gm.clone()) / (1.0 - 0.5 * gm.clone())
}

pub fn dual_loop_tfs(
    gm: &TransferFunction,
    gs: &TransferFunction,
    h: &TransferFunction,
) -> Result<DualLoopTfs> {
    let gc = gc_tf(gm);
    let h2 = h * h;
    let den = 1.0 - (&gc * gs) * &h2;
    if den.is_identically_zero() {
        return Err(Error::SingularModel);
    }
    let out_from_0 = (h * gs) / &den;
    let out_from_x = ((h2 * &gc) - 1.0) * gs / &den;
    let bf_from_x = (1.0 - gs.clone()) / &den;
    Ok(DualLoopTfs {
        bf_from_0: out_from_0.clone(),
        out_from_0,
        out_from_x,
        bf_from_x,
    })
}

/// Steady phase offset under a constant Doppler shift:
/// `4·Δf·ζ_m·ζ_s/(ω_m·ω_s)`. The natural frequencies are taken as given.
pub fn doppler_offset(delta_f_hz: f64, zeta_m: f64, zeta_s: f64, omega_m: f64, omega_s: f64) -> f64 {
    4.0 * delta_f_hz * zeta_m * zeta_s / (omega_m * omega_s)
}

/// Residual error of an asymmetric (single offset per direction) loop:
/// `−(θ_x − θ_0)·(f_mo − f_m)/(2·f_c)`.
pub fn asym_error(theta_x_minus_theta_0: f64, f_mo: f64, f_m: f64, f_c: f64) -> f64 {
    -theta_x_minus_theta_0 * (f_mo - f_m) / (2.0 * f_c)
}
