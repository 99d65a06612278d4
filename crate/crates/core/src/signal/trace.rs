use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Unit {
    Volts,
    Hertz,
    Dimensionless,
}

impl Unit {
    pub fn as_str(self) -> &'static str {
        match self {
            Unit::Volts => "volts",
            Unit::Hertz => "hertz",
            Unit::Dimensionless => "dimensionless",
        }
    }

    pub fn parse(s: &str) -> Option<Unit> {
        match s.trim() {
            "volts" | "V" => Some(Unit::Volts),
            "hertz" | "Hz" => Some(Unit::Hertz),
            "dimensionless" | "1" => Some(Unit::Dimensionless),
            _ => None,
        }
    }
}

/// Metadata carried alongside the samples.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TraceMeta {
    pub seed: Option<u64>,
    pub digest: Option<String>,
    /// Gate period `T_AM`, s; gates open at multiples of it (on first).
    pub gate_period: Option<f64>,
    pub gate_duty: Option<f64>,
    pub f_mod: Option<f64>,
    /// Lock-in time constant if the trace is demodulated, s.
    pub lockin_tau: Option<f64>,
}

/// Uniformly sampled time series; sample `k` is taken at `t0 + k / rate`.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalTrace {
    pub samples: Vec<f64>,
    pub rate: f64,
    pub t0: f64,
    pub unit: Unit,
    pub meta: TraceMeta,
}

impl SignalTrace {
    pub fn new(samples: Vec<f64>, rate: f64, t0: f64, unit: Unit) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::EmptyTrace);
        }
        if !(rate > 0.0 && rate.is_finite()) {
            return Err(invalid("rate", "must be > 0 Hz"));
        }
        Ok(Self {
            samples,
            rate,
            t0,
            unit,
            meta: TraceMeta::default(),
        })
    }

    pub fn with_meta(mut self, meta: TraceMeta) -> Self {
        self.meta = meta;
        self
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn dt(&self) -> f64 {
        1.0 / self.rate
    }

    pub fn time(&self, k: usize) -> f64 {
        self.t0 + k as f64 / self.rate
    }

    /// `len / rate`, s.
    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.rate
    }

    pub fn scaled(&self, k: f64) -> Self {
        let mut out = self.clone();
        out.samples.iter_mut().for_each(|s| *s *= k);
        out
    }

    /// Sample-wise sum; traces must share rate, start and length.
    pub fn add(&self, other: &SignalTrace) -> Result<Self> {
        if self.unit != other.unit {
            return Err(Error::UnitMismatch {
                expected: self.unit.as_str(),
                found: other.unit.as_str(),
            });
        }
        if self.len() != other.len() || self.rate != other.rate || self.t0 != other.t0 {
            return Err(invalid(
                "trace",
                "traces differ in length, rate or start time",
            ));
        }
        let mut out = self.clone();
        for (a, b) in out.samples.iter_mut().zip(&other.samples) {
            *a += b;
        }
        Ok(out)
    }

    pub fn require_unit(&self, unit: Unit) -> Result<()> {
        if self.unit == unit {
            Ok(())
        } else {
            Err(Error::UnitMismatch {
                expected: unit.as_str(),
                found: self.unit.as_str(),
            })
        }
    }

    pub fn mean(&self) -> f64 {
        self.samples.iter().sum::<f64>() / self.len() as f64
    }

    /// Population standard deviation.
    pub fn std_dev(&self) -> f64 {
        let m = self.mean();
        let var = self.samples.iter().map(|s| (s - m) * (s - m)).sum::<f64>() / self.len() as f64;
        libm::sqrt(var)
    }
}
