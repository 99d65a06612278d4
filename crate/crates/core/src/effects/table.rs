use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::units::BAR;

/// Reference temperature of the built-in gas coefficients, K.
pub const REFERENCE_TEMPERATURE: f64 = 293.0;

/// Wavelength the built-in gas coefficients were computed at, m.
pub const REFERENCE_WAVELENGTH: f64 = 632.8e-9;

/// Medium name. Unknown names are kept as [`Medium::Custom`].
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(from = "String", into = "String")]
pub enum Medium {
    Vacuum,
    He,
    H,
    Ne,
    Ar,
    Kr,
    H2,
    N2,
    Co,
    Custom(String),
}

impl Medium {
    pub const BUILTIN: [Medium; 9] = [
        Medium::Vacuum,
        Medium::He,
        Medium::H,
        Medium::Ne,
        Medium::Ar,
        Medium::Kr,
        Medium::H2,
        Medium::N2,
        Medium::Co,
    ];

    pub fn parse(name: &str) -> Medium {
        let trimmed = name.trim();
        Self::BUILTIN
            .iter()
            .find(|m| m.name().eq_ignore_ascii_case(trimmed))
            .cloned()
            .unwrap_or_else(|| Medium::Custom(trimmed.to_string()))
    }

    pub fn name(&self) -> &str {
        match self {
            Medium::Vacuum => "vacuum",
            Medium::He => "He",
            Medium::H => "H",
            Medium::Ne => "Ne",
            Medium::Ar => "Ar",
            Medium::Kr => "Kr",
            Medium::H2 => "H2",
            Medium::N2 => "N2",
            Medium::Co => "CO",
            Medium::Custom(s) => s,
        }
    }
}

impl fmt::Display for Medium {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl From<String> for Medium {
    fn from(s: String) -> Self {
        Medium::parse(&s)
    }
}

impl From<Medium> for String {
    fn from(m: Medium) -> Self {
        m.name().to_string()
    }
}

/// One medium's magneto-electric coefficients at its reference conditions.
///
/// Coefficients are in T^-1 V^-1 m, i.e. index change per (1 T x 1 V/m).
/// Gas records carry reference pressure and temperature; vacuum carries none.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoefficientRecord {
    pub medium: Medium,
    pub eta_melb: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta_meda: Option<f64>,
    /// Pa
    #[serde(default)]
    pub ref_pressure: Option<f64>,
    /// K
    #[serde(default)]
    pub ref_temperature: Option<f64>,
    /// m; `None` when the value holds at all wavelengths.
    #[serde(default)]
    pub ref_wavelength: Option<f64>,
}

impl CoefficientRecord {
    pub fn gas(medium: Medium, eta_melb: f64) -> Self {
        Self {
            medium,
            eta_melb,
            eta_meda: None,
            ref_pressure: Some(BAR),
            ref_temperature: Some(REFERENCE_TEMPERATURE),
            ref_wavelength: Some(REFERENCE_WAVELENGTH),
        }
    }

    pub fn is_gas(&self) -> bool {
        self.ref_pressure.is_some()
    }

    pub fn validate(&self) -> Result<()> {
        if !self.eta_melb.is_finite() {
            return Err(invalid("eta_melb", "must be finite"));
        }
        if let Some(m) = self.eta_meda {
            if !m.is_finite() {
                return Err(invalid("eta_meda", "must be finite"));
            }
        }
        match (self.ref_pressure, self.ref_temperature) {
            (Some(p), Some(t)) => {
                if !(p > 0.0 && p.is_finite()) {
                    return Err(invalid("ref_pressure", "must be > 0 Pa"));
                }
                if !(t > 0.0 && t.is_finite()) {
                    return Err(invalid("ref_temperature", "must be > 0 K"));
                }
            }
            (None, None) => {}
            _ => {
                return Err(invalid(
                    "ref_pressure",
                    "reference pressure and temperature must be given together",
                ))
            }
        }
        if let Some(w) = self.ref_wavelength {
            if !(w > 0.0 && w.is_finite()) {
                return Err(invalid("ref_wavelength", "must be > 0 m"));
            }
        }
        Ok(())
    }
}

/// Lookup table of coefficient records.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CoefficientTable {
    records: Vec<CoefficientRecord>,
}

impl CoefficientTable {
    /// Calculated values for non-resonant light at 1 T and 1 V/m.
    pub fn builtin() -> Self {
        let vacuum = CoefficientRecord {
            medium: Medium::Vacuum,
            eta_melb: 2.7e-32,
            eta_meda: Some(-6.7e-32),
            ref_pressure: None,
            ref_temperature: None,
            ref_wavelength: None,
        };
        let records = alloc::vec![
            vacuum,
            CoefficientRecord::gas(Medium::He, 1.6e-24),
            CoefficientRecord::gas(Medium::H, 3.4e-23),
            CoefficientRecord::gas(Medium::Ne, 4.2e-24),
            CoefficientRecord::gas(Medium::Ar, 3.6e-23),
            CoefficientRecord::gas(Medium::Kr, 7.8e-23),
            CoefficientRecord::gas(Medium::H2, 4.8e-23),
            CoefficientRecord::gas(Medium::N2, 9.0e-23),
            CoefficientRecord::gas(Medium::Co, 1.4e-22),
        ];
        Self { records }
    }

    pub fn from_records(records: Vec<CoefficientRecord>) -> Result<Self> {
        let mut table = Self {
            records: Vec::new(),
        };
        for r in records {
            table.insert(r)?;
        }
        Ok(table)
    }

    /// Inserts a record, replacing any existing one for the same medium.
    pub fn insert(&mut self, record: CoefficientRecord) -> Result<()> {
        record.validate()?;
        let name = record.medium.name();
        match self
            .records
            .iter_mut()
            .find(|r| r.medium.name().eq_ignore_ascii_case(name))
        {
            Some(slot) => *slot = record,
            None => self.records.push(record),
        }
        Ok(())
    }

    /// Applies each override on top of this table.
    pub fn merge(&mut self, overrides: CoefficientTable) -> Result<()> {
        for r in overrides.records {
            self.insert(r)?;
        }
        Ok(())
    }

    pub fn records(&self) -> &[CoefficientRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Media compare by case-insensitive name.
    pub fn get(&self, medium: &Medium) -> Option<&CoefficientRecord> {
        let name = medium.name();
        self.records
            .iter()
            .find(|r| r.medium.name().eq_ignore_ascii_case(name))
    }

    pub fn lookup(&self, name: &str) -> Result<&CoefficientRecord> {
        self.get(&Medium::parse(name))
            .ok_or_else(|| Error::UnknownMedium {
                name: name.to_string(),
                known: self.known_names(),
            })
    }

    fn known_names(&self) -> String {
        let mut out = String::new();
        for (i, r) in self.records.iter().enumerate() {
            if i > 0 {
                out.push_str(", ");
            }
            out.push_str(r.medium.name());
        }
        out
    }
}

impl Default for CoefficientTable {
    fn default() -> Self {
        Self::builtin()
    }
}
