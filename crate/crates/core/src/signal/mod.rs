//! Error-signal synthesis and lock-in demodulation.
//!
//! The Pound-Drever-Hall error signal is linearised: volts = slope x
//! frequency difference between the counterpropagating resonances. Frequency
//! noise is white Gaussian at a multiple of the shot-noise floor, plus an
//! optional linear drift.

mod lockin;
mod synth;
mod trace;

pub use lockin::LockIn;
pub use synth::{
    inject_calibration, noise_rng, synthesize_calibration, synthesize_noise, synthesize_run,
};
pub use trace::{SignalTrace, TraceMeta, Unit};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Frequency-noise model, in units relative to the optical frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseModel {
    /// Shot-noise floor, relative frequency per sqrt(Hz). Zero disables the
    /// white component.
    pub shot_floor: f64,
    /// Excess over the shot-noise floor, in `[1, 10)`.
    pub excess_factor: f64,
    /// Linear drift, relative frequency per second.
    pub drift_rate: f64,
    pub rng_seed: u64,
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self {
            shot_floor: 1.0e-17,
            excess_factor: 5.0,
            drift_rate: 0.0,
            rng_seed: 0,
        }
    }
}

impl NoiseModel {
    /// No white noise and no drift.
    pub fn silent() -> Self {
        Self {
            shot_floor: 0.0,
            excess_factor: 1.0,
            drift_rate: 0.0,
            rng_seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.shot_floor >= 0.0 && self.shot_floor.is_finite()) {
            return Err(invalid("shot_floor", "must be finite and >= 0"));
        }
        if !(1.0..10.0).contains(&self.excess_factor) {
            return Err(invalid("excess_factor", "must lie in [1, 10)"));
        }
        if !self.drift_rate.is_finite() {
            return Err(invalid("drift_rate", "must be finite"));
        }
        Ok(())
    }

    /// One-sided amplitude spectral density, relative per sqrt(Hz).
    pub fn amplitude_density(&self) -> f64 {
        self.excess_factor * self.shot_floor
    }
}

/// Linearised frequency discriminant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PdhConfig {
    /// Discriminant slope `D` at unit intracavity power, V/Hz.
    pub slope: f64,
    /// Intracavity power relative to the nominal value; the slope scales with it.
    pub power_scale: f64,
    /// Fractional change of intracavity power per second.
    pub power_drift: f64,
    /// Phase-modulation frequency, Hz (metadata only).
    pub modulation_frequency: f64,
}

impl Default for PdhConfig {
    fn default() -> Self {
        Self {
            slope: 1.0e-3,
            power_scale: 1.0,
            power_drift: 0.0,
            modulation_frequency: 20.0e6,
        }
    }
}

impl PdhConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.slope > 0.0 && self.slope.is_finite()) {
            return Err(invalid("slope", "must be > 0 V/Hz"));
        }
        if !(self.power_scale > 0.0 && self.power_scale.is_finite()) {
            return Err(invalid("power_scale", "must be > 0"));
        }
        if !self.power_drift.is_finite() {
            return Err(invalid("power_drift", "must be finite"));
        }
        Ok(())
    }

    /// Effective slope at time `t`, V/Hz.
    pub fn slope_at(&self, t: f64) -> f64 {
        self.slope * self.power_scale * (1.0 + self.power_drift * t)
    }
}
