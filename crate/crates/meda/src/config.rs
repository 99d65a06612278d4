//! The JSON experiment document shared by every subcommand.

use std::fs;
use std::path::Path;

use meda_core::cavity::CavityConfig;
use meda_core::effects::{CoefficientRecord, CoefficientTable, Conditions};
use meda_core::estimator::{Differencing, DEFAULT_SETTLE_TAUS};
use meda_core::experiment::{Effect, Experiment};
use meda_core::fields::{Quadrature, RodAssembly};
use meda_core::planner::ExperimentPlan;
use meda_core::signal::{LockIn, NoiseModel, PdhConfig};
use meda_core::units::ND_YAG_FREQUENCY;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{MedaError, Result};

/// Ring cavity; the filled length follows from the rods.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CavitySection {
    pub perimeter: f64,
    pub finesse: f64,
    pub laser_frequency: f64,
    /// Checked against the rod total when given.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub filled_length: Option<f64>,
}

impl Default for CavitySection {
    fn default() -> Self {
        Self {
            perimeter: 1.6,
            finesse: 30_000.0,
            laser_frequency: ND_YAG_FREQUENCY,
            filled_length: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LockInSection {
    /// Reference frequency; the drive frequency when absent.
    pub f_mod: Option<f64>,
    pub tau: f64,
    pub phase: f64,
    pub order: u8,
}

impl Default for LockInSection {
    fn default() -> Self {
        let l = LockIn::default();
        Self {
            f_mod: None,
            tau: l.tau,
            phase: l.phase,
            order: l.order,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Acquisition {
    /// Hz
    pub rate: f64,
    pub periods: usize,
    /// EOM calibration tone, Hz rms.
    pub calibration_hz_rms: f64,
    /// Length of each calibration segment, s.
    pub calibration_duration: f64,
}

impl Default for Acquisition {
    fn default() -> Self {
        Self {
            rate: 10_000.0,
            periods: 3,
            calibration_hz_rms: 6.5e-3,
            calibration_duration: 20.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstimatorSection {
    /// Excluded at the start of each half period, s. Five lock-in time
    /// constants when absent.
    pub settle: Option<f64>,
    pub differencing: Differencing,
}

impl Default for EstimatorSection {
    fn default() -> Self {
        Self {
            settle: None,
            differencing: Differencing::OnOff,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlanSection {
    /// Relative frequency sensitivity per sqrt(Hz).
    pub sensitivity: f64,
    pub target_snr: f64,
}

impl Default for PlanSection {
    fn default() -> Self {
        Self {
            sensitivity: 1e-16,
            target_snr: 1.0,
        }
    }
}

/// Every knob of a simulated run. Missing sections take the nitrogen
/// defaults; `"noise": null` disables noise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub medium: String,
    pub conditions: Conditions,
    pub effect: Effect,
    pub meda_ratio: Option<f64>,
    /// Records added to or replacing rows of the built-in table.
    pub coefficients: Vec<CoefficientRecord>,
    pub rods: RodAssembly,
    pub cavity: CavitySection,
    pub noise: Option<NoiseModel>,
    pub pdh: PdhConfig,
    pub lockin: LockInSection,
    pub acquisition: Acquisition,
    pub estimator: EstimatorSection,
    pub plan: PlanSection,
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let exp = Experiment::paper_nitrogen();
        Self {
            medium: "N2".into(),
            conditions: exp.conditions,
            effect: exp.effect,
            meda_ratio: exp.meda_ratio,
            coefficients: Vec::new(),
            rods: exp.assembly,
            cavity: CavitySection::default(),
            noise: Some(exp.noise),
            pdh: exp.pdh,
            lockin: LockInSection::default(),
            acquisition: Acquisition::default(),
            estimator: EstimatorSection::default(),
            plan: PlanSection::default(),
            seed: 0,
        }
    }
}

fn section(name: &str, e: meda_core::Error) -> MedaError {
    match e {
        meda_core::Error::InvalidParameter { field, reason } => {
            MedaError::Config(format!("`{name}.{field}`: {reason}"))
        }
        other => MedaError::Config(format!("`{name}`: {other}")),
    }
}

fn field(name: &str, reason: impl std::fmt::Display) -> MedaError {
    MedaError::Config(format!("`{name}`: {reason}"))
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| MedaError::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| MedaError::Config(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// SHA-256 of the canonical serialization, hex encoded.
    pub fn digest(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(bytes))
    }

    /// Built-in coefficients with the config's records applied on top.
    pub fn table(&self) -> Result<CoefficientTable> {
        let mut table = CoefficientTable::builtin();
        let overrides = CoefficientTable::from_records(self.coefficients.clone())
            .map_err(|e| section("coefficients", e))?;
        table
            .merge(overrides)
            .map_err(|e| section("coefficients", e))?;
        Ok(table)
    }

    pub fn f_mod(&self) -> f64 {
        self.lockin.f_mod.unwrap_or(self.rods.drive_frequency)
    }

    pub fn settle(&self) -> f64 {
        self.estimator
            .settle
            .unwrap_or(DEFAULT_SETTLE_TAUS * self.lockin.tau)
    }

    pub fn noise_model(&self) -> NoiseModel {
        match self.noise {
            Some(n) => NoiseModel {
                rng_seed: self.seed,
                ..n
            },
            None => NoiseModel::silent(),
        }
    }

    /// Checks every section, then the cross-section constraints, and builds
    /// the core experiment.
    pub fn experiment(&self) -> Result<Experiment> {
        let table = self.table()?;
        let medium = table
            .lookup(&self.medium)
            .map_err(|e| field("medium", e))?
            .clone();
        self.conditions
            .validate()
            .map_err(|e| section("conditions", e))?;
        self.rods.validate().map_err(|e| section("rods", e))?;
        let rods_total: f64 = self.rods.rods.iter().map(|r| r.length).sum();
        if let Some(l) = self.cavity.filled_length {
            if (l - rods_total).abs() > 1e-9 * rods_total {
                return Err(field(
                    "cavity.filled_length",
                    format!("{l} m differs from the rod total {rods_total} m"),
                ));
            }
        }
        let cavity = CavityConfig {
            perimeter: self.cavity.perimeter,
            finesse: self.cavity.finesse,
            laser_frequency: self.cavity.laser_frequency,
            filled_length: rods_total,
        };
        cavity.validate().map_err(|e| section("cavity", e))?;
        let noise = self.noise_model();
        noise.validate().map_err(|e| section("noise", e))?;
        self.pdh.validate().map_err(|e| section("pdh", e))?;
        let lockin = LockIn {
            f_mod: self.f_mod(),
            tau: self.lockin.tau,
            phase: self.lockin.phase,
            order: self.lockin.order,
        };
        lockin.validate().map_err(|e| section("lockin", e))?;

        let acq = &self.acquisition;
        let f_max = self.rods.drive_frequency.max(lockin.f_mod);
        if !(acq.rate > 2.0 * f_max && acq.rate.is_finite()) {
            return Err(field(
                "acquisition.rate",
                format!(
                    "sampling rate {} Hz must exceed twice the modulation frequency {f_max} Hz (Nyquist)",
                    acq.rate
                ),
            ));
        }
        if acq.periods == 0 {
            return Err(field("acquisition.periods", "must be >= 1"));
        }
        if !(acq.calibration_hz_rms > 0.0 && acq.calibration_hz_rms.is_finite()) {
            return Err(field("acquisition.calibration_hz_rms", "must be > 0 Hz"));
        }
        let settle = self.settle();
        if !(settle >= 0.0 && settle.is_finite()) {
            return Err(field("estimator.settle", "must be finite and >= 0 s"));
        }
        let half = self.rods.gate_period * self.rods.gate_duty.min(1.0 - self.rods.gate_duty);
        if !(settle < half) {
            return Err(field(
                "estimator.settle",
                format!("{settle} s leaves nothing of the shorter gate half ({half} s)"),
            ));
        }
        if !(acq.calibration_duration > settle) {
            return Err(field(
                "acquisition.calibration_duration",
                format!("must exceed the settle time {settle} s"),
            ));
        }
        if let Some(r) = self.meda_ratio {
            if !r.is_finite() {
                return Err(field("meda_ratio", "must be finite"));
            }
        }

        let exp = Experiment {
            medium,
            conditions: self.conditions,
            effect: self.effect,
            meda_ratio: self.meda_ratio,
            assembly: self.rods.clone(),
            cavity,
            noise,
            pdh: self.pdh,
            lockin,
            rate: acq.rate,
            periods: acq.periods,
            quadrature: Quadrature::default(),
        };
        exp.validate().map_err(|e| match e {
            meda_core::Error::MissingMedaRatio(_) => field("meda_ratio", e),
            other => section("experiment", other),
        })?;
        Ok(exp)
    }

    pub fn plan(&self) -> Result<ExperimentPlan> {
        let exp = self.experiment()?;
        Ok(ExperimentPlan::from_experiment(
            &exp,
            self.plan.sensitivity,
            self.plan.target_snr,
        )?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_is_valid_nitrogen() {
        let cfg = ExperimentConfig::default();
        let exp = cfg.experiment().unwrap();
        assert_eq!(exp.medium.medium.name(), "N2");
        assert_eq!(exp.cavity.filled_length, 0.8);
        assert_eq!(exp.lockin.f_mod, 300.0);
    }

    #[test]
    fn empty_document_is_default() {
        assert_eq!(
            ExperimentConfig::from_json("{}").unwrap(),
            ExperimentConfig::default()
        );
        let cfg = ExperimentConfig::default();
        assert_eq!(ExperimentConfig::from_json(&cfg.to_json()).unwrap(), cfg);
    }

    #[test]
    fn null_noise_is_silent() {
        let cfg = ExperimentConfig::from_json(r#"{"noise": null}"#).unwrap();
        assert_eq!(cfg.experiment().unwrap().noise, NoiseModel::silent());
    }

    #[test]
    fn errors_name_the_field() {
        let msg = |json: &str| {
            ExperimentConfig::from_json(json)
                .and_then(|c| c.experiment())
                .unwrap_err()
                .to_string()
        };
        assert!(msg(r#"{"acquisition": {"rate": 500}}"#).contains("acquisition.rate"));
        assert!(msg(r#"{"acquisition": {"rate": 500}}"#).contains("Nyquist"));
        assert!(msg(r#"{"medium": "Xe"}"#).contains("medium"));
        assert!(msg(r#"{"rods": {"drive_frequency": 50}}"#).contains("rods.drive_frequency"));
        assert!(msg(r#"{"noise": {"excess_factor": 20}}"#).contains("noise.excess_factor"));
        assert!(msg(r#"{"estimator": {"settle": 30}}"#).contains("estimator.settle"));
        assert!(msg(r#"{"cavity": {"filled_length": 1.0}}"#).contains("cavity.filled_length"));
        assert!(msg(r#"{"medium": "He", "meda_ratio": null}"#).contains("meda_ratio"));
        assert!(msg(r#"{"bogus": 1}"#).contains("bogus"));
    }

    #[test]
    fn overrides_reach_the_experiment() {
        let cfg = ExperimentConfig::from_json(
            r#"{"medium": "Xe", "coefficients": [{"medium": "Xe", "eta_melb": 2e-22,
                "ref_pressure": 1e5, "ref_temperature": 293}]}"#,
        )
        .unwrap();
        assert_eq!(cfg.experiment().unwrap().medium.eta_melb, 2e-22);
    }

    #[test]
    fn digest_tracks_content() {
        let a = ExperimentConfig::default();
        let mut b = a.clone();
        assert_eq!(a.digest(), b.digest());
        b.seed = 1;
        assert_ne!(a.digest(), b.digest());
        assert_eq!(a.digest().len(), 64);
    }
}
