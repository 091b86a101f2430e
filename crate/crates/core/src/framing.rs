//! Superframe pilot geometry and Walsh-Hadamard pilot multiplexing.
//!
//! Only the pilot fields are modeled. A pilot carries the transmitter phase on
//! QPSK symbols `±(1+j)/√2` whose signs follow a Walsh-Hadamard row; the
//! receiver despreads with the same row and derotates by `π/4`.

use std::f64::consts::FRAC_PI_4;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{invalid, Error, Result};

pub const STANDARD_PILOT_LEN: usize = 36;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SuperframeLayout {
    pub baud_hz: f64,
    pub pilot_len_used: usize,
    pub inter_pilot_period: usize,
    pub superframe_len: usize,
}

impl Default for SuperframeLayout {
    fn default() -> Self {
        Self {
            baud_hz: 8e6,
            pilot_len_used: 32,
            inter_pilot_period: 956,
            superframe_len: 612_540,
        }
    }
}

impl SuperframeLayout {
    pub fn new(
        baud_hz: f64,
        pilot_len_used: usize,
        inter_pilot_period: usize,
        superframe_len: usize,
    ) -> Result<Self> {
        let layout = Self {
            baud_hz,
            pilot_len_used,
            inter_pilot_period,
            superframe_len,
        };
        layout.validate()?;
        Ok(layout)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.baud_hz > 0.0 && self.baud_hz.is_finite()) {
            return Err(invalid("baud_hz", "must be > 0"));
        }
        if self.pilot_len_used == 0 || self.pilot_len_used > STANDARD_PILOT_LEN {
            return Err(invalid(
                "pilot_len",
                format!("must lie in 1..={STANDARD_PILOT_LEN}, got {}", self.pilot_len_used),
            ));
        }
        if self.inter_pilot_period <= self.pilot_len_used {
            return Err(invalid("inter_pilot", "must exceed the pilot length"));
        }
        if self.superframe_len < self.pilot_len_used {
            return Err(invalid("superframe_len", "shorter than one pilot"));
        }
        Ok(())
    }

    /// Rate at which pilot phase estimates arrive.
    pub fn tick_rate_hz(&self) -> f64 {
        self.baud_hz / self.inter_pilot_period as f64
    }

    pub fn tick_period_s(&self) -> f64 {
        self.inter_pilot_period as f64 / self.baud_hz
    }

    pub fn superframe_duration_s(&self) -> f64 {
        self.superframe_len as f64 / self.baud_hz
    }

    /// `10·log10(pilot_len_used)`.
    pub fn compression_gain_db(&self) -> f64 {
        10.0 * (self.pilot_len_used as f64).log10()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PilotSequence {
    pub code_index: usize,
    pub chips: Vec<i8>,
}

impl PilotSequence {
    pub fn len(&self) -> usize {
        self.chips.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chips.is_empty()
    }

    pub fn dot(&self, other: &PilotSequence) -> i64 {
        self.chips
            .iter()
            .zip(&other.chips)
            .map(|(&a, &b)| i64::from(a) * i64::from(b))
            .sum()
    }

    /// Applies an elementwise ±1 overlay. Orthogonality between rows is kept
    /// because the same overlay multiplies both sides of every dot product.
    pub fn scrambled(&self, overlay: &[i8]) -> Result<PilotSequence> {
        if overlay.len() != self.chips.len() {
            return Err(Error::LengthMismatch {
                expected: self.chips.len(),
                actual: overlay.len(),
            });
        }
        Ok(PilotSequence {
            code_index: self.code_index,
            chips: self.chips.iter().zip(overlay).map(|(a, b)| a * b).collect(),
        })
    }
}

/// Row `index` of the Sylvester Hadamard matrix of order `length`.
pub fn wh_sequence(index: usize, length: usize) -> Result<PilotSequence> {
    if length == 0 || !length.is_power_of_two() {
        return Err(invalid("length", format!("must be a power of two, got {length}")));
    }
    if index >= length {
        return Err(Error::IndexOutOfRange { index, length });
    }
    let chips = (0..length)
        .map(|j| if (index & j).count_ones().is_multiple_of(2) { 1 } else { -1 })
        .collect();
    Ok(PilotSequence { code_index: index, chips })
}

/// Fixed ±1 overlay from a PRBS-15 (x¹⁵ + x¹⁴ + 1) generator.
pub fn scrambler_overlay(length: usize, seed: u16) -> Vec<i8> {
    let mut state = (seed & 0x7fff).max(1);
    (0..length)
        .map(|_| {
            let bit = ((state >> 14) ^ (state >> 13)) & 1;
            state = ((state << 1) | bit) & 0x7fff;
            if bit == 0 {
                1
            } else {
                -1
            }
        })
        .collect()
}

/// Start indices of the pilot fields in one superframe: one per complete
/// inter-pilot period. The partial period at the tail is dropped.
pub fn pilot_positions(layout: &SuperframeLayout) -> Vec<usize> {
    let count = layout.superframe_len / layout.inter_pilot_period;
    (0..count).map(|k| k * layout.inter_pilot_period).collect()
}

/// `(1/N)·Σ rx[k]·seq[k]`.
pub fn pilot_correlate(rx: &[Complex64], seq: &PilotSequence) -> Result<Complex64> {
    if rx.len() != seq.len() {
        return Err(Error::LengthMismatch {
            expected: seq.len(),
            actual: rx.len(),
        });
    }
    let sum: Complex64 = rx
        .iter()
        .zip(&seq.chips)
        .map(|(r, &c)| r * f64::from(c))
        .sum();
    Ok(sum / seq.len() as f64)
}

/// QPSK pilot symbols carrying `phase`: `e^{i(phase + π/4)}·chip`.
pub fn pilot_symbols(phase: f64, seq: &PilotSequence) -> Vec<Complex64> {
    let carrier = Complex64::from_polar(1.0, phase + FRAC_PI_4);
    seq.chips.iter().map(|&c| carrier * f64::from(c)).collect()
}

/// Symbol-level pilot reception: modulate, add complex AWGN at
/// `symbol_snr_db` per symbol, despread and derotate.
pub fn simulate_pilot_rx<R: Rng + ?Sized>(
    tx_phase: f64,
    seq: &PilotSequence,
    symbol_snr_db: f64,
    rng: &mut R,
) -> Complex64 {
    let mut symbols = pilot_symbols(tx_phase, seq);
    if symbol_snr_db != f64::INFINITY {
        let scale = 10f64.powf(-symbol_snr_db / 20.0) * std::f64::consts::FRAC_1_SQRT_2;
        for s in symbols.iter_mut() {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            *s += Complex64::new(scale * re, scale * im);
        }
    }
    let corr = pilot_correlate(&symbols, seq).expect("symbols built from seq");
    corr * Complex64::from_polar(1.0, -FRAC_PI_4)
}
