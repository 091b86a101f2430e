//! Directed carrier legs between the two nodes.
//!
//! Each leg rotates the transmitted phasor by its wrapped propagation phase
//! and a Doppler ramp, then adds circular complex Gaussian noise. Noise is
//! injected at the decimated (pilot) rate, so its level already includes the
//! pilot compression gain.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{invalid, Result};
use crate::pll::wrap_phase;

/// Coherent gain of a 32-symbol pilot correlation, `10·log10(32)`.
pub const PILOT_COMPRESSION_GAIN_DB: f64 = 15.051_499_783_199_06;

/// Carrier frequencies of the dual-carrier plan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CarrierPlan {
    pub fc_hz: f64,
    pub fm_hz: f64,
    pub fs_hz: f64,
}

impl Default for CarrierPlan {
    fn default() -> Self {
        Self {
            fc_hz: 2200e6,
            fm_hz: 50e6,
            fs_hz: 40e6,
        }
    }
}

impl CarrierPlan {
    pub fn new(fc_hz: f64, fm_hz: f64, fs_hz: f64) -> Result<Self> {
        if !(0.0 < fs_hz && fs_hz < fm_hz && fm_hz < fc_hz && fc_hz.is_finite()) {
            return Err(invalid(
                "carrier_plan",
                format!("need 0 < fs < fm < fc, got fc={fc_hz} fm={fm_hz} fs={fs_hz}"),
            ));
        }
        Ok(Self { fc_hz, fm_hz, fs_hz })
    }

    /// Carriers 1..4: master `fc∓fm`, follower `fc∓fs`.
    pub fn carriers(&self) -> [f64; 4] {
        [
            self.fc_hz - self.fm_hz,
            self.fc_hz + self.fm_hz,
            self.fc_hz - self.fs_hz,
            self.fc_hz + self.fs_hz,
        ]
    }
}

/// Wrapped propagation phase `−2π·f·τ`.
pub fn prop_phase(f_hz: f64, tau_s: f64) -> f64 {
    // Reduce the cycle count before scaling by 2π to keep precision at GHz·µs.
    let cycles = f_hz * tau_s;
    wrap_phase(-TAU * (cycles - cycles.round()))
}

/// Per-tick complex noise standard deviation for unit signal amplitude.
pub fn sigma_from_snr(snr_db: f64, compression_gain_db: f64) -> f64 {
    if snr_db == f64::INFINITY {
        return 0.0;
    }
    10f64.powf(-(snr_db + compression_gain_db) / 20.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelLeg {
    pub tau_s: f64,
    pub prop_phase: f64,
    pub doppler_hz: f64,
    pub noise_sigma: f64,
    /// Decimated tick period used for the Doppler ramp.
    pub tick_period_s: f64,
}

impl ChannelLeg {
    pub fn new(
        carrier_hz: f64,
        tau_s: f64,
        doppler_hz: f64,
        noise_sigma: f64,
        tick_period_s: f64,
    ) -> Result<Self> {
        if !(carrier_hz > 0.0) {
            return Err(invalid("carrier_hz", "must be > 0"));
        }
        if !(tau_s >= 0.0 && tau_s.is_finite()) {
            return Err(invalid("tau_s", format!("must be >= 0, got {tau_s}")));
        }
        if !(noise_sigma >= 0.0 && noise_sigma.is_finite()) {
            return Err(invalid("noise_sigma", "must be finite and >= 0"));
        }
        if !doppler_hz.is_finite() {
            return Err(invalid("doppler_hz", "must be finite"));
        }
        Ok(Self {
            tau_s,
            prop_phase: prop_phase(carrier_hz, tau_s),
            doppler_hz,
            noise_sigma,
            tick_period_s,
        })
    }

    /// Channel rotation (propagation plus Doppler) at `tick_index`.
    pub fn rotation(&self, tick_index: u64) -> f64 {
        let doppler_cycles = self.doppler_hz * tick_index as f64 * self.tick_period_s;
        self.prop_phase + TAU * doppler_cycles.fract()
    }

    /// Received phasor with explicit unit-normal draws `[g_a, g_b]`.
    pub fn step_with(&self, tx: Complex64, tick_index: u64, g: [f64; 2]) -> Complex64 {
        let rotated = tx * Complex64::from_polar(1.0, self.rotation(tick_index));
        let scale = self.noise_sigma * std::f64::consts::FRAC_1_SQRT_2;
        rotated + Complex64::new(scale * g[0], scale * g[1])
    }

    pub fn step<R: Rng + ?Sized>(&self, tx: Complex64, tick_index: u64, rng: &mut R) -> Complex64 {
        if self.noise_sigma == 0.0 {
            return self.step_with(tx, tick_index, [0.0, 0.0]);
        }
        let g = [rng.sample(StandardNormal), rng.sample(StandardNormal)];
        self.step_with(tx, tick_index, g)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn prop_phase_examples() {
        assert_eq!(prop_phase(2.2e9, 0.0), 0.0);
        assert!(prop_phase(2.2e9, 5.0 / 2.2e9).abs() < 1e-9);
        assert!((prop_phase(2.2e9, 0.25 / 2.2e9) + FRAC_PI_2).abs() < 1e-9);
    }

    #[test]
    fn sigma_examples() {
        assert!((sigma_from_snr(0.0, 15.0) - 0.177827941).abs() < 1e-8);
        assert_eq!(sigma_from_snr(f64::INFINITY, 15.0), 0.0);
        assert!((sigma_from_snr(20.0, 15.0) - 0.0177827941).abs() < 1e-9);
    }

    #[test]
    fn plan_validation_and_midpoints() {
        assert!(CarrierPlan::new(2200e6, 40e6, 50e6).is_err());
        let plan = CarrierPlan::default();
        let c = plan.carriers();
        assert_eq!((c[0] + c[1]) / 2.0, plan.fc_hz);
        assert_eq!((c[2] + c[3]) / 2.0, plan.fc_hz);
    }

    #[test]
    fn noiseless_leg_is_pure_rotation() {
        let leg = ChannelLeg::new(2.15e9, 1.3e-7, 0.0, 0.0, 1e-4).unwrap();
        let tx = Complex64::from_polar(1.0, 0.4);
        let rx = leg.step_with(tx, 12345, [1.0, 1.0]);
        assert!((rx.arg() - wrap_phase(0.4 + leg.prop_phase)).abs() < 1e-12);
        assert!((rx.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn doppler_rotation_per_tick() {
        let t = 956.0 / 8e6;
        let leg = ChannelLeg::new(2.2e9, 0.0, 1.0, 0.0, t).unwrap();
        let step = leg.rotation(1) - leg.rotation(0);
        assert!((step - TAU * t).abs() < 1e-15);
        assert!((step - 7.5084e-4).abs() < 1e-7);
    }

    proptest::proptest! {
        #[test]
        fn reciprocity_of_pair_sums(tau in 0.0f64..1e-3, fc in 1e9f64..1e10, fm in 1e6f64..5e8, fs_frac in 0.01f64..0.99) {
            let plan = CarrierPlan::new(fc, fm, fm * fs_frac).unwrap();
            let c = plan.carriers();
            let th: Vec<f64> = c.iter().map(|&f| prop_phase(f, tau)).collect();
            // Pair means agree modulo π, i.e. pair sums agree modulo 2π.
            let d = wrap_phase(th[0] + th[1] - th[2] - th[3]);
            proptest::prop_assert!(d.abs() < 1e-6, "{d}");
        }
    }
}
