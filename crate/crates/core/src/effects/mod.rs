//! Field-induced refractive-index anisotropies.
//!
//! Two bilinear magneto-electric effects in crossed transverse fields are
//! modelled here:
//!
//! * linear birefringence (MELB), `n_B - n_E`, the index difference between
//!   light polarized along B and along E;
//! * directional anisotropy (MEDA), `n_+ - n_-`, the index difference between
//!   beams counterpropagating along and against `E x B`.
//!
//! Both are given as coefficients normalised to 1 T and 1 V/m. Gas values
//! are referenced to 1 bar and 293 K and scale with density.

mod equivalence;
mod table;

pub use equivalence::{
    verify_equivalence_construction, BilinearResponse, EquivalenceReport, Response, SymTensor2,
    Vec2,
};
pub use table::{
    CoefficientRecord, CoefficientTable, Medium, REFERENCE_TEMPERATURE, REFERENCE_WAVELENGTH,
};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::units::BAR;

/// Gas state used for ideal-gas density scaling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Conditions {
    /// Pa
    pub pressure: f64,
    /// K
    pub temperature: f64,
}

impl Conditions {
    pub fn new(pressure: f64, temperature: f64) -> Result<Self> {
        let c = Self {
            pressure,
            temperature,
        };
        c.validate()?;
        Ok(c)
    }

    /// 1 bar, 293 K.
    pub fn reference() -> Self {
        Self {
            pressure: BAR,
            temperature: REFERENCE_TEMPERATURE,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.pressure >= 0.0) || !self.pressure.is_finite() {
            return Err(invalid("pressure", "must be finite and >= 0 Pa"));
        }
        if !(self.temperature > 0.0) || !self.temperature.is_finite() {
            return Err(invalid("temperature", "must be finite and > 0 K"));
        }
        Ok(())
    }
}

impl Default for Conditions {
    fn default() -> Self {
        Self::reference()
    }
}

/// Coefficients after density scaling.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaledEta {
    pub melb: f64,
    pub meda: Option<f64>,
}

/// Ideal-gas density ratio `(P/P_ref)(T_ref/T)`; 1 for vacuum.
pub fn density_factor(record: &CoefficientRecord, conditions: &Conditions) -> f64 {
    match (record.ref_pressure, record.ref_temperature) {
        (Some(p_ref), Some(t_ref)) => {
            (conditions.pressure / p_ref) * (t_ref / conditions.temperature)
        }
        _ => 1.0,
    }
}

/// Scales a record's coefficients to the given gas conditions.
pub fn scale_coefficient(record: &CoefficientRecord, conditions: &Conditions) -> ScaledEta {
    let k = density_factor(record, conditions);
    ScaledEta {
        melb: record.eta_melb * k,
        meda: record.eta_meda.map(|m| m * k),
    }
}

/// `n_B - n_E` for crossed fields `b` (T) and `e` (V/m).
pub fn delta_n_melb(record: &CoefficientRecord, b: f64, e: f64, conditions: &Conditions) -> f64 {
    scale_coefficient(record, conditions).melb * b * e
}

/// `n_+ - n_-`, positive direction along `E x B`.
///
/// Records carrying their own MEDA coefficient (vacuum) use it directly.
/// Otherwise `meda_ratio` gives `dn_MEDA / dn_MELB`.
pub fn delta_n_meda(
    record: &CoefficientRecord,
    b: f64,
    e: f64,
    conditions: &Conditions,
    meda_ratio: Option<f64>,
) -> Result<f64> {
    let scaled = scale_coefficient(record, conditions);
    match (scaled.meda, meda_ratio) {
        (Some(eta), _) => Ok(eta * b * e),
        (None, Some(ratio)) => {
            if !ratio.is_finite() {
                return Err(invalid("meda_ratio", "must be finite"));
            }
            Ok(ratio * scaled.melb * b * e)
        }
        (None, None) => Err(Error::MissingMedaRatio(record.medium.name().into())),
    }
}

/// Jones birefringence `n_{+45} - n_{-45}` for parallel fields.
///
/// Angles are counterclockwise from the field direction, seen by an observer
/// the light travels towards.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JonesBirefringence {
    pub delta_n: f64,
    pub axis_plus_deg: f64,
    pub axis_minus_deg: f64,
}

pub fn jones_from_melb(delta_n_melb: f64) -> JonesBirefringence {
    JonesBirefringence {
        delta_n: delta_n_melb,
        axis_plus_deg: 45.0,
        axis_minus_deg: -45.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn n2() -> CoefficientRecord {
        CoefficientTable::builtin().lookup("N2").unwrap().clone()
    }

    #[test]
    fn scaling_at_reference_is_identity() {
        let s = scale_coefficient(&n2(), &Conditions::reference());
        assert_eq!(s.melb, 9.0e-23);
    }

    #[test]
    fn scaling_half_pressure() {
        let c = Conditions::new(0.5 * BAR, 293.0).unwrap();
        assert_relative_eq!(
            scale_coefficient(&n2(), &c).melb,
            4.5e-23,
            max_relative = 1e-15
        );
    }

    #[test]
    fn vacuum_ignores_conditions() {
        let table = CoefficientTable::builtin();
        let vac = table.lookup("vacuum").unwrap();
        let c = Conditions::new(3.0 * BAR, 77.0).unwrap();
        let s = scale_coefficient(vac, &c);
        assert_eq!(s.melb, 2.7e-32);
        assert_eq!(s.meda, Some(-6.7e-32));
    }

    #[test]
    fn melb_reference_and_paper_fields() {
        let r = n2();
        let c = Conditions::reference();
        assert_eq!(delta_n_melb(&r, 1.0, 1.0, &c), 9.0e-23);
        let dn = delta_n_melb(&r, 0.85, 3.5e5, &c);
        assert_relative_eq!(dn, 2.7e-17, max_relative = 0.03);
        assert_eq!(delta_n_melb(&r, 0.0, 3.5e5, &c), 0.0);
    }

    #[test]
    fn meda_vacuum_high_fields() {
        let table = CoefficientTable::builtin();
        let vac = table.lookup("vacuum").unwrap();
        let dn = delta_n_meda(vac, 15.0, 2.0e7, &Conditions::reference(), None).unwrap();
        assert_relative_eq!(dn, -2.01e-23, max_relative = 1e-12);
    }

    #[test]
    fn meda_gas_needs_ratio() {
        let r = n2();
        let c = Conditions::reference();
        assert!(matches!(
            delta_n_meda(&r, 1.0, 1.0, &c, None),
            Err(Error::MissingMedaRatio(_))
        ));
        let dn = delta_n_meda(&r, 0.85, 3.5e5, &c, Some(1.0)).unwrap();
        assert_eq!(dn, delta_n_melb(&r, 0.85, 3.5e5, &c));
        assert_eq!(delta_n_meda(&r, 0.85, 0.0, &c, Some(1.0)).unwrap(), 0.0);
    }

    #[test]
    fn jones_is_identity_with_axes() {
        let j = jones_from_melb(9.0e-23);
        assert_eq!(j.delta_n, 9.0e-23);
        assert_eq!((j.axis_plus_deg, j.axis_minus_deg), (45.0, -45.0));
        assert_eq!(jones_from_melb(0.0).delta_n, 0.0);
        assert_eq!(jones_from_melb(-3.0e-20).delta_n, -3.0e-20);
    }

    #[test]
    fn invalid_conditions() {
        assert!(Conditions::new(-1.0, 293.0).is_err());
        assert!(Conditions::new(1.0, 0.0).is_err());
    }
}
