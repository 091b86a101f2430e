use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("phase of a zero-magnitude phasor is undefined")]
    ZeroPhasor,

    #[error(
        "mask fit residual too large: worst point at {offset_hz} Hz, mask {mask_dbc_hz:.2} dBc/Hz, \
         model {model_dbc_hz:.2} dBc/Hz"
    )]
    FitResidual {
        offset_hz: f64,
        mask_dbc_hz: f64,
        model_dbc_hz: f64,
    },

    #[error("transfer function denominator is identically zero")]
    SingularModel,

    #[error("insufficient samples: need at least {required}, got {available}")]
    InsufficientSamples { required: usize, available: usize },

    #[error("expected {expected} symbols, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("index {index} out of range for length {length}")]
    IndexOutOfRange { index: usize, length: usize },

    #[error("scenario diverged at tick {tick}: {quantity} = {value:e}")]
    Diverged {
        tick: usize,
        quantity: &'static str,
        value: f64,
    },
}

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
