//! Second-order tracking loop.
//!
//! A [`LoopUnit`] is one digital PLL: an `angle` phase discriminator, the
//! two-integrator controller `Y(s) = (2ζω + ω²/s)/s` with both integrators
//! replaced by trapezoidal accumulators, and an NCO. The NCO accumulates the
//! per-tick phase increments produced by the outer integrator, so the NCO
//! phase equals the outer accumulator modulo 2π.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;

use crate::analysis::RationalDelayTF;
use crate::error::{invalid, Error, Result};

/// Wraps a phase into `(-π, π]`.
pub fn wrap_phase(x: f64) -> f64 {
    let mut r = x.rem_euclid(TAU);
    if r > PI {
        r -= TAU;
    }
    // rem_euclid may round up to exactly TAU for tiny negative inputs.
    if r <= -PI {
        r += TAU;
    }
    r
}

/// Phase of `received` relative to `reference`, in `(-π, π]`.
pub fn discriminate(received: Complex64, reference: Complex64) -> Result<f64> {
    if received.norm_sqr() == 0.0 || reference.norm_sqr() == 0.0 {
        return Err(Error::ZeroPhasor);
    }
    Ok(wrap_phase((received * reference.conj()).arg()))
}

/// How natural frequencies given in Hz map to the `ω` of the loop equations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OmegaUnits {
    /// `ω = 2π·f` rad/s.
    #[default]
    HzTimes2Pi,
    /// The Hz figure is used as rad/s unchanged.
    HzAsRad,
}

impl OmegaUnits {
    pub fn to_rad_per_s(self, hz: f64) -> f64 {
        match self {
            OmegaUnits::HzTimes2Pi => TAU * hz,
            OmegaUnits::HzAsRad => hz,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            OmegaUnits::HzTimes2Pi => "hz_times_2pi",
            OmegaUnits::HzAsRad => "hz_as_rad",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoopConfig {
    pub zeta: f64,
    /// Natural frequency in rad/s.
    pub omega_n: f64,
    pub tick_period_s: f64,
}

impl LoopConfig {
    pub fn new(zeta: f64, omega_n: f64, tick_period_s: f64) -> Result<Self> {
        if !(zeta > 0.0 && zeta.is_finite()) {
            return Err(invalid("zeta", format!("must be > 0, got {zeta}")));
        }
        if !(omega_n > 0.0 && omega_n.is_finite()) {
            return Err(invalid("omega_n", format!("must be > 0, got {omega_n}")));
        }
        if !(tick_period_s > 0.0 && tick_period_s.is_finite()) {
            return Err(invalid(
                "tick_period_s",
                format!("must be > 0, got {tick_period_s}"),
            ));
        }
        Ok(Self {
            zeta,
            omega_n,
            tick_period_s,
        })
    }

    pub fn from_hz(zeta: f64, natural_hz: f64, units: OmegaUnits, tick_period_s: f64) -> Result<Self> {
        Self::new(zeta, units.to_rad_per_s(natural_hz), tick_period_s)
    }

    /// `ω·T`; the trapezoidal discretization is only faithful well below 0.1.
    pub fn normalized_bandwidth(&self) -> f64 {
        self.omega_n * self.tick_period_s
    }

    pub fn is_undersampled(&self) -> bool {
        self.normalized_bandwidth() > 0.1
    }
}

/// Controller accumulators plus NCO phase of one tracking loop.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LoopUnit {
    /// Trapezoidal integral of `ω²·e` (rad/s).
    pub acc_inner: f64,
    /// Trapezoidal integral of `2ζω·e + acc_inner` (rad, unwrapped).
    pub acc_outer: f64,
    /// NCO phase in `(-π, π]`.
    pub nco_phase: f64,
    last_error: f64,
    last_drive: f64,
}

impl LoopUnit {
    pub fn new() -> Self {
        Self::default()
    }

    /// Starts the loop with its NCO (and outer accumulator) at `phase`.
    pub fn with_phase(phase: f64) -> Self {
        Self {
            acc_outer: phase,
            nco_phase: wrap_phase(phase),
            ..Self::default()
        }
    }

    /// Advances the controller by one tick and returns the phase increment
    /// (rad/tick) for the NCO.
    pub fn controller_step(&mut self, error: f64, cfg: &LoopConfig) -> f64 {
        let half_t = 0.5 * cfg.tick_period_s;
        let w2 = cfg.omega_n * cfg.omega_n;
        self.acc_inner += half_t * (w2 * error + w2 * self.last_error);
        let drive = 2.0 * cfg.zeta * cfg.omega_n * error + self.acc_inner;
        let increment = half_t * (drive + self.last_drive);
        self.acc_outer += increment;
        self.last_error = error;
        self.last_drive = drive;
        increment
    }

    /// Advances the NCO by `control` radians and returns its unit phasor.
    pub fn nco_step(&mut self, control: f64) -> Complex64 {
        self.nco_phase = wrap_phase(self.nco_phase + control);
        Complex64::from_polar(1.0, self.nco_phase)
    }

    pub fn nco_phasor(&self) -> Complex64 {
        Complex64::from_polar(1.0, self.nco_phase)
    }

    /// One full loop iteration on an already-discriminated phase error.
    pub fn step(&mut self, error: f64, cfg: &LoopConfig) -> Complex64 {
        let control = self.controller_step(error, cfg);
        self.nco_step(control)
    }

    /// Tracks an input phasor: discriminates against the current NCO, then steps.
    pub fn track(&mut self, input: Complex64, cfg: &LoopConfig) -> Result<f64> {
        let error = discriminate(input, self.nco_phasor())?;
        self.step(error, cfg);
        Ok(error)
    }
}

/// Unity-feedback closure of the loop controller:
/// `G(s) = (2ζωs + ω²)/(s² + 2ζωs + ω²)`.
pub fn closed_tf(cfg: &LoopConfig) -> RationalDelayTF {
    let w = cfg.omega_n;
    let z = cfg.zeta;
    RationalDelayTF::new(vec![w * w, 2.0 * z * w], vec![w * w, 2.0 * z * w, 1.0], 0.0)
        .expect("second-order loop denominator has a nonzero leading coefficient")
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn wrap_examples() {
        assert_eq!(wrap_phase(0.0), 0.0);
        assert!((wrap_phase(3.0 * PI) - PI).abs() < 1e-12);
        assert_eq!(wrap_phase(-PI), PI);
        assert_eq!(wrap_phase(PI), PI);
        assert!((wrap_phase(-3.0 * FRAC_PI_2) - FRAC_PI_2).abs() < 1e-12);
        assert!(wrap_phase(-1e-300) <= 0.0 && wrap_phase(-1e-300) > -PI);
    }

    #[test]
    fn discriminator_examples() {
        let one = Complex64::new(1.0, 0.0);
        assert_eq!(discriminate(one, one).unwrap(), 0.0);
        let j = Complex64::new(0.0, 1.0);
        assert!((discriminate(j, one).unwrap() - FRAC_PI_2).abs() < 1e-15);
        assert_eq!(discriminate(Complex64::new(0.0, 0.0), one), Err(Error::ZeroPhasor));
        assert_eq!(discriminate(one, Complex64::new(0.0, 0.0)), Err(Error::ZeroPhasor));
    }

    #[test]
    fn zero_error_keeps_zero_output() {
        let cfg = LoopConfig::new(1.0, 100.0, 1e-3).unwrap();
        let mut unit = LoopUnit::new();
        for _ in 0..1000 {
            assert_eq!(unit.controller_step(0.0, &cfg), 0.0);
        }
        assert_eq!(unit, LoopUnit::new());
    }

    #[test]
    fn nco_quarter_turns() {
        let mut unit = LoopUnit::new();
        let expected = [FRAC_PI_2, PI, -FRAC_PI_2, 0.0];
        for want in expected {
            let p = unit.nco_step(FRAC_PI_2);
            assert!((unit.nco_phase - want).abs() < 1e-12, "{} vs {want}", unit.nco_phase);
            assert!((p.norm() - 1.0).abs() < 1e-15);
        }
        let before = unit.nco_phase;
        unit.nco_step(0.0);
        assert_eq!(unit.nco_phase, before);
    }

    #[test]
    fn rejects_bad_config() {
        assert!(LoopConfig::new(0.0, 1.0, 1e-3).is_err());
        assert!(LoopConfig::new(1.0, -1.0, 1e-3).is_err());
        assert!(LoopConfig::new(1.0, 1.0, 0.0).is_err());
        let cfg = LoopConfig::from_hz(1.0, 1000.0, OmegaUnits::HzTimes2Pi, 1.0 / 8368.0).unwrap();
        assert!(cfg.is_undersampled());
    }

    #[test]
    fn closed_tf_dc_and_natural_frequency() {
        let cfg = LoopConfig::new(1.0, 50.0, 1e-4).unwrap();
        let g = closed_tf(&cfg);
        assert_eq!(g.eval(Complex64::new(0.0, 0.0)), Complex64::new(1.0, 0.0));
        let at_wn = g.eval(Complex64::new(0.0, 50.0)).norm();
        assert!((at_wn - 5f64.sqrt() / 2.0).abs() < 1e-12);
    }

    #[test]
    fn closed_tf_rolls_off_20db_per_decade() {
        let cfg = LoopConfig::new(0.7, 10.0, 1e-4).unwrap();
        let g = closed_tf(&cfg);
        let db = |w: f64| 20.0 * g.eval(Complex64::new(0.0, w)).norm().log10();
        let slope = db(10_000.0) - db(1000.0);
        assert!((slope + 20.0).abs() < 1.0, "slope {slope}");
    }

    proptest::proptest! {
        #[test]
        fn wrap_stays_in_interval_and_congruent(x in -1e6f64..1e6) {
            let w = wrap_phase(x);
            proptest::prop_assert!(w > -PI && w <= PI);
            let k = ((x - w) / TAU).round();
            proptest::prop_assert!((x - w - k * TAU).abs() < 1e-9 * x.abs().max(1.0));
        }

        #[test]
        fn nco_phasor_is_unit(controls in proptest::collection::vec(-10.0f64..10.0, 1..200)) {
            let mut unit = LoopUnit::new();
            for c in controls {
                let p = unit.nco_step(c);
                proptest::prop_assert!((p.norm() - 1.0).abs() < 1e-12);
                proptest::prop_assert!(unit.nco_phase > -PI && unit.nco_phase <= PI);
            }
        }
    }
}
