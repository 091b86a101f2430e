//! Continuous-domain loop analysis: transfer functions, Bode responses,
//! delay margins and closed-form offset predictions.
//!
//! The dual-loop functions are reproduced exactly as derived for the
//! analytical model. Note that `out_from_0` has DC gain 1/2 with unity-DC
//! blocks, whereas the time-domain simulator (see [`crate::nodes`]) settles
//! to `θ_bf = θ_0`, i.e. DC gain 1. Only the identities shared by both
//! (the follower-oscillator DC null, the low-/high-pass shapes and the
//! delay-margin trend) are used to cross-check them.

mod bode;
mod loops;
mod margin;
mod tf;

pub use bode::{bode, default_bode_grid, log_grid, BodePoint};
pub use loops::{
    asym_error, doppler_offset, dual_loop_tfs, gc_tf, single_loop_tfs, DualLoopTfs,
    SingleLoopInput, SingleLoopTfs,
};
pub use margin::{delay_margin, margin_sweep, open_loop, DelayMargin, MarginPoint, SPEED_OF_LIGHT};
pub use tf::{RationalDelayTF, TransferFunction};
