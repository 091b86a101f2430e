//! Phase-noise spectral estimation: decimation, Dolph-Chebyshev windowing
//! and the averaged periodogram over non-overlapping blocks.
//!
//! Levels are reported as `L(f) = S_φ(f)/2` in dBc/Hz, where `S_φ` is the
//! one-sided PSD of the input phase in rad²/Hz.

mod psd;
mod window;

pub use psd::{decimate, psd_estimate, psd_estimate_with_window, PsdConfig, PsdEstimate};
pub use window::{
    cheb_window, peak_sidelobe_db, window_response_db, MAX_CHEB_ATTEN_DB, MIN_CHEB_ATTEN_DB,
    MIN_CHEB_LEN,
};
