//! A complete simulated measurement: medium, rods, cavity, noise,
//! discriminant and lock-in settings.

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::SQRT_2;

use serde::{Deserialize, Serialize};

use crate::cavity::CavityConfig;
use crate::effects::{
    delta_n_meda, delta_n_melb, CoefficientRecord, CoefficientTable, Conditions, Medium,
};
use crate::error::{invalid, Error, Result};
use crate::fields::{Quadrature, RodAssembly};
use crate::signal::{LockIn, NoiseModel, PdhConfig};

/// Which anisotropy drives the counterpropagating split.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Effect {
    /// Directional anisotropy `n_+ - n_-`.
    #[default]
    Meda,
    /// Linear birefringence `n_B - n_E`, read out with unit efficiency.
    Melb,
}

impl Effect {
    /// Index change for fields `b` (T) and `e` (V/m).
    pub fn delta_n(
        self,
        record: &CoefficientRecord,
        b: f64,
        e: f64,
        conditions: &Conditions,
        meda_ratio: Option<f64>,
    ) -> Result<f64> {
        match self {
            Effect::Meda => delta_n_meda(record, b, e, conditions, meda_ratio),
            Effect::Melb => Ok(delta_n_melb(record, b, e, conditions)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Experiment {
    pub medium: CoefficientRecord,
    pub conditions: Conditions,
    pub effect: Effect,
    pub meda_ratio: Option<f64>,
    pub assembly: RodAssembly,
    pub cavity: CavityConfig,
    pub noise: NoiseModel,
    pub pdh: PdhConfig,
    pub lockin: LockIn,
    /// Sampling rate, Hz.
    pub rate: f64,
    /// Number of gate periods in a run.
    pub periods: usize,
    pub quadrature: Quadrature,
}

impl Experiment {
    /// Nitrogen with the rod-sum effective field of 0.85 T and 0.35 MV/m rms
    /// over half of a 1.6 m ring.
    pub fn paper_nitrogen() -> Self {
        let assembly = RodAssembly {
            b_eff_override: Some(0.85),
            ..RodAssembly::default()
        };
        let lockin = LockIn {
            f_mod: assembly.drive_frequency,
            ..LockIn::default()
        };
        Self {
            medium: CoefficientTable::builtin()
                .get(&Medium::N2)
                .cloned()
                .expect("built-in table has N2"),
            conditions: Conditions::reference(),
            effect: Effect::Meda,
            meda_ratio: Some(1.0),
            assembly,
            cavity: CavityConfig::default(),
            noise: NoiseModel::default(),
            pdh: PdhConfig::default(),
            lockin,
            rate: 10_000.0,
            periods: 3,
            quadrature: Quadrature::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.medium.validate()?;
        self.conditions.validate()?;
        self.assembly.validate()?;
        self.cavity.validate()?;
        self.noise.validate()?;
        self.pdh.validate()?;
        self.lockin.validate()?;
        if !(self.rate > 2.0 * self.assembly.drive_frequency) {
            return Err(Error::Undersampled {
                rate: self.rate,
                f_mod: self.assembly.drive_frequency,
            });
        }
        if !(self.rate > 2.0 * self.lockin.f_mod) {
            return Err(Error::Undersampled {
                rate: self.rate,
                f_mod: self.lockin.f_mod,
            });
        }
        if self.periods == 0 {
            return Err(invalid("periods", "must be >= 1"));
        }
        let rods: f64 = self.assembly.rods.iter().map(|r| r.length).sum();
        if (rods - self.cavity.filled_length).abs() > 1e-9 * rods {
            return Err(invalid(
                "filled_length",
                format!(
                    "cavity filled length {} m differs from the rod total {} m",
                    self.cavity.filled_length, rods
                ),
            ));
        }
        if self.effect == Effect::Meda
            && self.medium.eta_meda.is_none()
            && self.meda_ratio.is_none()
        {
            return Err(Error::MissingMedaRatio(self.medium.medium.name().into()));
        }
        Ok(())
    }

    /// Run length, s.
    pub fn duration(&self) -> f64 {
        self.periods as f64 * self.assembly.gate_period
    }

    /// Index change per (T x V/m) at the experiment's conditions.
    pub fn effect_coefficient(&self) -> Result<f64> {
        self.effect
            .delta_n(&self.medium, 1.0, 1.0, &self.conditions, self.meda_ratio)
    }

    /// Per-rod conversion from electrode voltage to `nu_ccw - nu_cw`, Hz/V.
    pub fn rod_couplings(&self) -> Result<Vec<f64>> {
        let eta = self.effect_coefficient()?;
        let nu_per_length = self.cavity.laser_frequency / self.cavity.perimeter;
        self.assembly
            .rods
            .iter()
            .enumerate()
            .map(|(i, rod)| {
                let b = self.assembly.rod_b_eff(i, self.quadrature)?;
                let sign = f64::from(self.assembly.orientation_signs[i]);
                Ok(nu_per_length * sign * rod.length * eta * b / rod.electrode_gap)
            })
            .collect()
    }

    /// Total conversion from electrode voltage to frequency split, Hz/V.
    pub fn voltage_coupling(&self) -> Result<f64> {
        Ok(self.rod_couplings()?.iter().sum())
    }

    /// Rms frequency split while the field is on, Hz.
    pub fn expected_split_rms(&self) -> Result<f64> {
        Ok(self.voltage_coupling()? * self.assembly.drive_voltage_peak / SQRT_2)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn nitrogen_split_matches_hand_chain() {
        let exp = Experiment::paper_nitrogen();
        exp.validate().unwrap();
        // nu * 1/2 * 9e-23 * 0.85 * (2000 / 4e-3 / sqrt 2)
        let nu = crate::units::ND_YAG_FREQUENCY;
        let expect = nu * 0.5 * 9.0e-23 * 0.85 * 5e5 / SQRT_2;
        assert_relative_eq!(
            exp.expected_split_rms().unwrap(),
            expect,
            max_relative = 1e-12
        );
        assert_relative_eq!(expect, 3.8e-3, max_relative = 0.01);
    }

    #[test]
    fn flipped_rods_cancel() {
        let mut exp = Experiment::paper_nitrogen();
        exp.assembly.orientation_signs = alloc::vec![1, -1, 1, -1];
        assert_eq!(exp.expected_split_rms().unwrap(), 0.0);
    }

    #[test]
    fn rate_and_length_checks() {
        let mut exp = Experiment::paper_nitrogen();
        exp.rate = 600.0;
        assert!(matches!(exp.validate(), Err(Error::Undersampled { .. })));
        let mut exp = Experiment::paper_nitrogen();
        exp.cavity.filled_length = 0.4;
        assert!(exp.validate().is_err());
    }
}
