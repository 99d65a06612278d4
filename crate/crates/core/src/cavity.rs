//! Ring-cavity arithmetic.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::units::{ND_YAG_FREQUENCY, SPEED_OF_LIGHT};

/// Ring cavity driven by the laser. All values SI.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CavityConfig {
    /// Round-trip length `L`, m.
    pub perimeter: f64,
    pub finesse: f64,
    /// Optical frequency `nu`, Hz.
    pub laser_frequency: f64,
    /// Length of the beam path inside the field rods, m.
    pub filled_length: f64,
}

impl Default for CavityConfig {
    fn default() -> Self {
        Self {
            perimeter: 1.6,
            finesse: 30_000.0,
            laser_frequency: ND_YAG_FREQUENCY,
            filled_length: 0.8,
        }
    }
}

impl CavityConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.perimeter > 0.0 && self.perimeter.is_finite()) {
            return Err(invalid("perimeter", "must be > 0 m"));
        }
        if !(self.filled_length > 0.0 && self.filled_length <= self.perimeter) {
            return Err(invalid("filled_length", "must lie in (0, perimeter]"));
        }
        if !(self.finesse > 1.0 && self.finesse.is_finite()) {
            return Err(invalid("finesse", "must be > 1"));
        }
        if !(self.laser_frequency > 0.0 && self.laser_frequency.is_finite()) {
            return Err(invalid("laser_frequency", "must be > 0 Hz"));
        }
        Ok(())
    }

    /// `filled_length / perimeter`.
    pub fn fill(&self) -> f64 {
        self.filled_length / self.perimeter
    }
}

/// `c / L`, Hz.
pub fn free_spectral_range(config: &CavityConfig) -> f64 {
    SPEED_OF_LIGHT / config.perimeter
}

/// Resonance full width at half maximum, `FSR / finesse`, Hz.
pub fn linewidth(config: &CavityConfig) -> f64 {
    free_spectral_range(config) / config.finesse
}

/// Resonance shift produced by an index change `delta_n` over the filled
/// length: `nu * (L_fields / L) * delta_n`.
pub fn frequency_shift(delta_n: f64, config: &CavityConfig) -> f64 {
    config.laser_frequency * config.fill() * delta_n
}

/// `nu_ccw - nu_cw` for a directional anisotropy `n_+ - n_-`.
///
/// With `orientation = +1` the clockwise beam propagates along `+E x B`.
pub fn counterprop_split(delta_n_meda: f64, config: &CavityConfig, orientation: i8) -> f64 {
    f64::from(orientation.signum()) * frequency_shift(delta_n_meda, config)
}
