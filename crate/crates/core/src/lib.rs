//! Dual-carrier remote carrier-phase synchronization: simulator and
//! linear-analysis toolkit.

pub mod analysis;
pub mod channel;
pub mod config;
pub mod error;
pub mod framing;
pub mod nodes;
pub mod oscillator;
pub mod output;
pub mod pll;
pub mod spectral;

pub use error::{Error, Result};
