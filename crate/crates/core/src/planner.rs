//! Expected signals and integration times.
//!
//! The SNR of an averaged measurement grows as `sqrt(T)` for white noise:
//! `SNR(T) = (dnu / nu) sqrt(T) / S`, with `S` the relative frequency
//! sensitivity per sqrt(Hz).

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::cavity::CavityConfig;
use crate::effects::{CoefficientRecord, Conditions};
use crate::error::{invalid, Error, Result};
use crate::experiment::{Effect, Experiment};
use crate::fields::assembly_fields;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentPlan {
    pub medium: CoefficientRecord,
    pub conditions: Conditions,
    pub effect: Effect,
    pub meda_ratio: Option<f64>,
    /// T
    pub b_eff: f64,
    /// V/m rms
    pub e_rms: f64,
    /// m
    pub l_fields: f64,
    /// Cavity perimeter, m.
    pub perimeter: f64,
    /// Hz
    pub laser_frequency: f64,
    /// Relative frequency sensitivity per sqrt(Hz).
    pub sensitivity: f64,
    pub target_snr: f64,
}

impl ExperimentPlan {
    /// Plan matching a simulated experiment's medium, rods and cavity.
    pub fn from_experiment(exp: &Experiment, sensitivity: f64, target_snr: f64) -> Result<Self> {
        let f = assembly_fields(&exp.assembly, exp.quadrature)?;
        Ok(Self {
            medium: exp.medium.clone(),
            conditions: exp.conditions,
            effect: exp.effect,
            meda_ratio: exp.meda_ratio,
            b_eff: f.b_eff,
            e_rms: f.e_rms,
            l_fields: f.l_signed.abs(),
            perimeter: exp.cavity.perimeter,
            laser_frequency: exp.cavity.laser_frequency,
            sensitivity,
            target_snr,
        })
    }

    pub fn validate(&self) -> Result<()> {
        self.medium.validate()?;
        self.conditions.validate()?;
        if !(self.sensitivity > 0.0 && self.sensitivity.is_finite()) {
            return Err(invalid("sensitivity", "must be > 0 per sqrt(Hz)"));
        }
        if !(self.target_snr > 0.0 && self.target_snr.is_finite()) {
            return Err(invalid("target_snr", "must be > 0"));
        }
        if !(self.b_eff.is_finite() && self.e_rms.is_finite()) {
            return Err(invalid("fields", "B and E must be finite"));
        }
        self.cavity().validate()
    }

    pub fn cavity(&self) -> CavityConfig {
        CavityConfig {
            perimeter: self.perimeter,
            finesse: CavityConfig::default().finesse,
            laser_frequency: self.laser_frequency,
            filled_length: self.l_fields,
        }
    }

    pub fn fill(&self) -> f64 {
        self.l_fields / self.perimeter
    }

    /// Index change at the plan's fields.
    pub fn delta_n(&self) -> Result<f64> {
        self.delta_n_at(self.b_eff, self.e_rms)
    }

    fn delta_n_at(&self, b: f64, e: f64) -> Result<f64> {
        self.effect
            .delta_n(&self.medium, b, e, &self.conditions, self.meda_ratio)
    }
}

/// `nu * (L_fields / L) * dn`, Hz rms. Sign follows the index change.
pub fn expected_signal(plan: &ExperimentPlan) -> Result<f64> {
    plan.validate()?;
    Ok(plan.laser_frequency * plan.fill() * plan.delta_n()?)
}

/// Averaging time to reach `target_snr`: `(snr * S / |dnu / nu|)^2`, s.
pub fn time_to_snr(plan: &ExperimentPlan) -> Result<f64> {
    let relative = (expected_signal(plan)? / plan.laser_frequency).abs();
    if relative == 0.0 {
        return Err(Error::ZeroSignal);
    }
    let r = plan.target_snr * plan.sensitivity / relative;
    Ok(r * r)
}

/// Sensitivity expressed in multiples of the medium's index change per
/// sqrt(Hz): `(S / fill) / |dn|`.
pub fn dn_unit_sensitivity(plan: &ExperimentPlan) -> Result<f64> {
    plan.validate()?;
    let dn = plan.delta_n()?.abs();
    if dn == 0.0 {
        return Err(Error::ZeroSignal);
    }
    Ok(plan.sensitivity / plan.fill() / dn)
}

/// One row of a B-E trade study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub medium: String,
    pub b: f64,
    pub e: f64,
    pub dn: f64,
    pub dnu: f64,
    /// Time to SNR 1, s; infinite for a zero signal.
    pub t_snr1: f64,
}

/// Evaluates the plan on every `(b, e)` pair of the grid, B-major.
pub fn sweep(plan: &ExperimentPlan, b_values: &[f64], e_values: &[f64]) -> Result<Vec<SweepRow>> {
    plan.validate()?;
    let mut rows = Vec::with_capacity(b_values.len() * e_values.len());
    for &b in b_values {
        for &e in e_values {
            let dn = plan.delta_n_at(b, e)?;
            let dnu = plan.laser_frequency * plan.fill() * dn;
            let rel = (dnu / plan.laser_frequency).abs();
            let t_snr1 = if rel == 0.0 {
                f64::INFINITY
            } else {
                let r = plan.sensitivity / rel;
                r * r
            };
            rows.push(SweepRow {
                medium: plan.medium.medium.name().to_string(),
                b,
                e,
                dn,
                dnu,
                t_snr1,
            });
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::effects::CoefficientTable;
    use approx::assert_relative_eq;

    fn plan(medium: &str, b: f64, e: f64, sensitivity: f64) -> ExperimentPlan {
        ExperimentPlan {
            medium: CoefficientTable::builtin().lookup(medium).unwrap().clone(),
            conditions: Conditions::reference(),
            effect: Effect::Meda,
            meda_ratio: Some(1.0),
            b_eff: b,
            e_rms: e,
            l_fields: 0.8,
            perimeter: 1.6,
            laser_frequency: 2.8e14,
            sensitivity,
            target_snr: 1.0,
        }
    }

    #[test]
    fn nitrogen_signal() {
        let p = plan("N2", 0.85, 3.5e5, 1e-16);
        // 2.8e14 * 0.5 * 9e-23 * 0.85 * 3.5e5
        assert_relative_eq!(
            expected_signal(&p).unwrap(),
            3.7485e-3,
            max_relative = 1e-12
        );
        assert_relative_eq!(expected_signal(&p).unwrap(), 3.8e-3, max_relative = 0.05);
        let zero = plan("N2", 0.85, 0.0, 1e-16);
        assert_eq!(expected_signal(&zero).unwrap(), 0.0);
        assert_eq!(time_to_snr(&zero).unwrap_err(), Error::ZeroSignal);
    }

    #[test]
    fn vacuum_projection() {
        let p = plan("vacuum", 15.0, 2.0e7, 1.9e-21);
        assert_relative_eq!(
            expected_signal(&p).unwrap(),
            -2.814e-9,
            max_relative = 1e-12
        );
        // (1.9e-21 / 1.005e-23)^2
        let t = time_to_snr(&p).unwrap();
        assert_relative_eq!(t, 35_741.69, max_relative = 1e-6);
        let p20 = ExperimentPlan {
            sensitivity: 1e-20,
            ..p.clone()
        };
        assert_relative_eq!(time_to_snr(&p20).unwrap(), 990_074.5, max_relative = 1e-6);
        let p4 = ExperimentPlan {
            sensitivity: 4.0 * 1.9e-21,
            ..p
        };
        assert_relative_eq!(time_to_snr(&p4).unwrap(), 16.0 * t, max_relative = 1e-12);
    }

    #[test]
    fn dn_units() {
        let p = plan("N2", 0.85, 3.5e5, 1e-16);
        // (1e-16 / 0.5) / 2.6775e-17
        assert_relative_eq!(
            dn_unit_sensitivity(&p).unwrap(),
            7.4697,
            max_relative = 1e-4
        );
        let full = ExperimentPlan {
            l_fields: 1.6,
            ..p.clone()
        };
        assert_relative_eq!(
            dn_unit_sensitivity(&full).unwrap(),
            0.5 * dn_unit_sensitivity(&p).unwrap(),
            max_relative = 1e-12
        );
        let doubled = ExperimentPlan {
            e_rms: 7.0e5,
            ..p.clone()
        };
        assert_relative_eq!(
            dn_unit_sensitivity(&doubled).unwrap(),
            0.5 * dn_unit_sensitivity(&p).unwrap(),
            max_relative = 1e-12
        );
    }

    #[test]
    fn invalid_plans() {
        assert!(expected_signal(&plan("N2", 0.85, 3.5e5, 0.0)).is_err());
        let mut p = plan("N2", 0.85, 3.5e5, 1e-16);
        p.target_snr = -1.0;
        assert!(time_to_snr(&p).is_err());
    }

    #[test]
    fn sweep_grid() {
        let p = plan("vacuum", 15.0, 2.0e7, 1.9e-21);
        let rows = sweep(&p, &[0.0, 15.0], &[1.0e7, 2.0e7]).unwrap();
        assert_eq!(rows.len(), 4);
        assert_eq!(rows[0].dnu, 0.0);
        assert!(rows[0].t_snr1.is_infinite());
        assert_relative_eq!(
            rows[3].t_snr1,
            time_to_snr(&p).unwrap(),
            max_relative = 1e-12
        );
        assert_relative_eq!(rows[2].t_snr1, 4.0 * rows[3].t_snr1, max_relative = 1e-12);
    }

    #[test]
    fn from_experiment_matches_fields() {
        let exp = Experiment::paper_nitrogen();
        let p = ExperimentPlan::from_experiment(&exp, 1e-16, 1.0).unwrap();
        assert_eq!(p.b_eff, 0.85);
        assert_relative_eq!(p.l_fields, 0.8, max_relative = 1e-12);
        assert_relative_eq!(
            expected_signal(&p).unwrap(),
            exp.expected_split_rms().unwrap(),
            max_relative = 1e-12
        );
    }
}
