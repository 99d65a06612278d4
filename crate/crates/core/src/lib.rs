//! Numerical core of a ring-cavity magneto-electric metrology simulator.
//!
//! The crate covers the whole measurement chain without touching any IO:
//!
//! * [`effects`]: magneto-electric coefficients, density scaling, index
//!   anisotropies and the linear/Jones birefringence equivalence construction.
//! * [`fields`]: field-rod geometry, magnetic profile, electrode drive.
//! * [`cavity`]: ring-cavity arithmetic and index-to-frequency conversion.
//! * [`signal`]: error-signal synthesis, calibration injection, lock-in.
//! * [`estimator`]: on/off differencing, calibration, sensitivity.
//! * [`planner`]: expected signals and integration time for a target SNR.
//!
//! The crate is `no_std` and only needs `alloc`.

#![no_std]
#![forbid(unsafe_code)]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod cavity;
pub mod effects;
pub mod error;
pub mod estimator;
pub mod experiment;
pub mod fields;
pub mod planner;
pub mod signal;
pub mod spectral;
pub mod units;

pub use error::{Error, Result};
