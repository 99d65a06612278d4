//! SI constants used across the crate.

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// One bar in pascal.
pub const BAR: f64 = 1.0e5;

/// Millimetre in metres.
pub const MM: f64 = 1.0e-3;

/// Nd:YAG laser frequency at 1064 nm, Hz.
pub const ND_YAG_FREQUENCY: f64 = SPEED_OF_LIGHT / 1064.0e-9;

/// Euclidean remainder, in `[0, |b|)`.
pub(crate) fn rem_euclid(a: f64, b: f64) -> f64 {
    let r = libm::fmod(a, b);
    if r < 0.0 {
        r + b.abs()
    } else {
        r
    }
}
