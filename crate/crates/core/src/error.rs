use alloc::string::String;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("unknown medium `{name}`; known media: {known}")]
    UnknownMedium { name: String, known: String },

    #[error(
        "medium `{0}` has no directional-anisotropy coefficient and no MEDA/MELB ratio was given"
    )]
    MissingMedaRatio(String),

    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    #[error("response is not bilinear: {0}")]
    NotBilinear(String),

    #[error("response has a bilinear birefringence along/orthogonal to parallel fields ({0:e})")]
    ParallelAxisTerm(f64),

    #[error("sampling rate {rate} Hz must exceed twice the modulation frequency {f_mod} Hz")]
    Undersampled { rate: f64, f_mod: f64 },

    #[error("empty trace")]
    EmptyTrace,

    #[error("trace too short: {0}")]
    TraceTooShort(String),

    #[error("unit mismatch: expected {expected}, found {found}")]
    UnitMismatch {
        expected: &'static str,
        found: &'static str,
    },

    #[error("no data: {0}")]
    Empty(&'static str),

    #[error("time {t} s is outside the calibration bracket [{before}, {after}] s")]
    OutsideCalibration { t: f64, before: f64, after: f64 },

    #[error("expected signal is zero")]
    ZeroSignal,
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        field,
        reason: reason.into(),
    }
}
