use crate::error::{invalid, Result};

use super::tf::TransferFunction;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BodePoint {
    pub freq_hz: f64,
    pub magnitude_db: f64,
    /// Unwrapped along the grid; NaN where the response is undefined.
    pub phase_deg: f64,
}

/// `n` logarithmically spaced frequencies from `start_hz` to `stop_hz` inclusive.
pub fn log_grid(start_hz: f64, stop_hz: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![start_hz],
        _ => {
            let (a, b) = (start_hz.log10(), stop_hz.log10());
            (0..n)
                .map(|i| 10f64.powf(a + (b - a) * i as f64 / (n - 1) as f64))
                .collect()
        }
    }
}

/// Default grid for the loop Bode plots: 1 Hz to 100 kHz, 600 points.
pub fn default_bode_grid() -> Vec<f64> {
    log_grid(1.0, 1e5, 600)
}

/// Frequency response at `s = j2πf`. Poles give `+∞` dB rather than failing.
pub fn bode(tf: &TransferFunction, freqs_hz: &[f64]) -> Result<Vec<BodePoint>> {
    if let Some(bad) = freqs_hz.iter().find(|f| !(f.is_finite() && **f > 0.0)) {
        return Err(invalid("freqs_hz", format!("frequencies must be positive and finite, got {bad}")));
    }
    let mut out = Vec::with_capacity(freqs_hz.len());
    let mut prev_raw: Option<f64> = None;
    let mut offset = 0.0;
    for &f in freqs_hz {
        let v = tf.eval_hz(f);
        let mag = v.norm();
        let magnitude_db = if mag.is_finite() { 20.0 * mag.log10() } else { f64::INFINITY };
        let raw = if v.is_finite() && mag > 0.0 { v.arg().to_degrees() } else { f64::NAN };
        let phase_deg = if raw.is_nan() {
            f64::NAN
        } else {
            if let Some(p) = prev_raw {
                let step = raw - p;
                if step > 180.0 {
                    offset -= 360.0;
                } else if step < -180.0 {
                    offset += 360.0;
                }
            }
            prev_raw = Some(raw);
            raw + offset
        };
        out.push(BodePoint {
            freq_hz: f,
            magnitude_db,
            phase_deg,
        });
    }
    Ok(out)
}
