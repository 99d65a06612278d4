//! Field rods: magnetic profile along the beam, effective field, electrode
//! field and the gated sinusoidal drive.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::{PI, SQRT_2};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::units::{rem_euclid, MM};

/// Amplifier limit on the electrode voltage, V.
pub const MAX_DRIVE_VOLTAGE: f64 = 2000.0;

/// Nominal electrode drive band, Hz.
pub const DRIVE_BAND: (f64, f64) = (200.0, 500.0);

/// Field fraction at the inner end of the ramp.
const RAMP_TOP: f64 = 0.98;
/// Field fraction at the outer end of the ramp.
const RAMP_BOTTOM: f64 = 0.01;

/// Geometry and magnet profile of one rod. Lengths in m, field in T.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RodGeometry {
    pub length: f64,
    pub aperture: [f64; 2],
    pub electrode_gap: f64,
    pub plateau_b: f64,
    pub plateau_span: f64,
    /// Length over which the field falls from 98 % to 1 % of `plateau_b`.
    pub ramp_span: f64,
    /// Decay length of the exponential tail beyond the ramp.
    pub fringe_decay: f64,
}

impl Default for RodGeometry {
    fn default() -> Self {
        Self {
            length: 0.200,
            aperture: [4.0 * MM, 4.0 * MM],
            electrode_gap: 4.0 * MM,
            plateau_b: 0.185,
            plateau_span: 0.185,
            ramp_span: 0.020,
            fringe_decay: 5.0 * MM,
        }
    }
}

impl RodGeometry {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("length", self.length),
            ("aperture", self.aperture[0]),
            ("aperture", self.aperture[1]),
            ("electrode_gap", self.electrode_gap),
            ("plateau_span", self.plateau_span),
            ("ramp_span", self.ramp_span),
            ("fringe_decay", self.fringe_decay),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid(name, "must be a positive length"));
            }
        }
        if !self.plateau_b.is_finite() {
            return Err(invalid("plateau_b", "must be finite"));
        }
        Ok(())
    }

    /// Effective field over the rod length, `(1/L) * integral of B dz` on
    /// `[-L/2, L/2]`.
    pub fn effective_field(&self, quad: Quadrature) -> Result<f64> {
        let half = 0.5 * self.length;
        effective_field(
            |z| magnetic_profile(z, self),
            (-half, half),
            self.length,
            quad,
        )
    }
}

/// Field on the beam axis at distance `z` from the rod centre.
///
/// Flat at `plateau_b` over the central `plateau_span`, linear from 98 % to
/// 1 % over `ramp_span`, then an exponential tail.
pub fn magnetic_profile(z: f64, geometry: &RodGeometry) -> f64 {
    let b0 = geometry.plateau_b;
    let d = z.abs() - 0.5 * geometry.plateau_span;
    if d <= 0.0 {
        b0
    } else if d <= geometry.ramp_span {
        b0 * (RAMP_TOP - (RAMP_TOP - RAMP_BOTTOM) * d / geometry.ramp_span)
    } else {
        b0 * RAMP_BOTTOM * libm::exp(-(d - geometry.ramp_span) / geometry.fringe_decay)
    }
}

/// Composite midpoint rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quadrature {
    /// Maximum step, m.
    pub step: f64,
}

impl Default for Quadrature {
    fn default() -> Self {
        Self { step: 0.1 * MM }
    }
}

impl Quadrature {
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F, start: f64, end: f64) -> Result<f64> {
        if !(self.step > 0.0) {
            return Err(invalid("step", "quadrature step must be > 0"));
        }
        let span = end - start;
        if span == 0.0 {
            return Ok(0.0);
        }
        // tolerate rounding in the span so shifted windows keep the same grid
        let n = libm::ceil(span.abs() / self.step - 1e-9).max(1.0) as usize;
        let h = span / n as f64;
        let sum: f64 = (0..n).map(|k| f(start + (k as f64 + 0.5) * h)).sum();
        Ok(sum * h)
    }
}

/// `B_eff = (1/length) * integral of profile over window`.
pub fn effective_field<F: Fn(f64) -> f64>(
    profile: F,
    window: (f64, f64),
    length: f64,
    quad: Quadrature,
) -> Result<f64> {
    if !(length > 0.0) {
        return Err(invalid("length", "effective-field length must be > 0"));
    }
    Ok(quad.integrate(profile, window.0, window.1)? / length)
}

/// Parallel-plate field `voltage / gap`, V/m.
pub fn electrode_field(voltage: f64, gap: f64) -> Result<f64> {
    if !(gap > 0.0) {
        return Err(invalid("electrode_gap", "must be > 0"));
    }
    Ok(voltage / gap)
}

/// Field multiplier for a transverse beam offset (m) from the aperture centre:
/// `1 + 0.01 (offset / 1 mm)^2`.
pub fn transverse_offset_factor(offset: f64, geometry: &RodGeometry) -> Result<f64> {
    let half = 0.5 * geometry.aperture[0].min(geometry.aperture[1]);
    if !(offset.abs() <= half) {
        return Err(invalid(
            "offset",
            format!("{offset} m lies outside the aperture half-width {half} m"),
        ));
    }
    let r = offset / MM;
    Ok(1.0 + 0.01 * r * r)
}

/// Field rods sharing one electrode drive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RodAssembly {
    pub rods: Vec<RodGeometry>,
    /// Per-rod sign of `E x B` relative to the clockwise beam.
    pub orientation_signs: Vec<i8>,
    pub drive_voltage_peak: f64,
    /// Modulation frequency `f_mod`, Hz.
    pub drive_frequency: f64,
    /// On/off gate period `T_AM`, s.
    pub gate_period: f64,
    /// Fraction of each gate period with the field on (on first).
    pub gate_duty: f64,
    /// Accept `drive_frequency` outside the nominal band.
    pub allow_out_of_band: bool,
    /// Per-rod effective field used instead of the profile integral, T.
    pub b_eff_override: Option<f64>,
}

impl Default for RodAssembly {
    fn default() -> Self {
        Self::with_rods(4)
    }
}

impl RodAssembly {
    pub fn with_rods(count: usize) -> Self {
        Self {
            rods: vec![RodGeometry::default(); count],
            orientation_signs: vec![1; count],
            drive_voltage_peak: MAX_DRIVE_VOLTAGE,
            drive_frequency: 300.0,
            gate_period: 20.0,
            gate_duty: 0.5,
            allow_out_of_band: false,
            b_eff_override: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.rods.is_empty() {
            return Err(Error::Empty("rod assembly"));
        }
        for rod in &self.rods {
            rod.validate()?;
        }
        if self.orientation_signs.len() != self.rods.len() {
            return Err(invalid(
                "orientation_signs",
                format!(
                    "{} signs for {} rods",
                    self.orientation_signs.len(),
                    self.rods.len()
                ),
            ));
        }
        if self.orientation_signs.iter().any(|s| *s != 1 && *s != -1) {
            return Err(invalid("orientation_signs", "each sign must be +1 or -1"));
        }
        if !(self.drive_voltage_peak.abs() <= MAX_DRIVE_VOLTAGE) {
            return Err(invalid(
                "drive_voltage_peak",
                format!("|V| must not exceed {MAX_DRIVE_VOLTAGE} V"),
            ));
        }
        if !(self.drive_frequency > 0.0 && self.drive_frequency.is_finite()) {
            return Err(invalid("drive_frequency", "must be > 0 Hz"));
        }
        if !self.in_band() && !self.allow_out_of_band {
            return Err(invalid(
                "drive_frequency",
                format!(
                    "{} Hz is outside the {}-{} Hz drive band (set allow_out_of_band to override)",
                    self.drive_frequency, DRIVE_BAND.0, DRIVE_BAND.1
                ),
            ));
        }
        if !(self.gate_period > 0.0 && self.gate_period.is_finite()) {
            return Err(invalid("gate_period", "must be > 0 s"));
        }
        if !(self.gate_duty > 0.0 && self.gate_duty < 1.0) {
            return Err(invalid("gate_duty", "must lie in (0, 1)"));
        }
        if let Some(b) = self.b_eff_override {
            if !b.is_finite() {
                return Err(invalid("b_eff_override", "must be finite"));
            }
        }
        Ok(())
    }

    pub fn in_band(&self) -> bool {
        (DRIVE_BAND.0..=DRIVE_BAND.1).contains(&self.drive_frequency)
    }

    /// Non-fatal configuration warnings.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !self.in_band() {
            out.push(format!(
                "drive frequency {} Hz is outside the nominal {}-{} Hz band",
                self.drive_frequency, DRIVE_BAND.0, DRIVE_BAND.1
            ));
        }
        out
    }

    /// Gate state at time `t`.
    pub fn gate(&self, t: f64) -> bool {
        rem_euclid(t, self.gate_period) < self.gate_duty * self.gate_period
    }

    /// Electrode voltage at time `t`, V.
    pub fn drive_voltage(&self, t: f64) -> f64 {
        if self.gate(t) {
            self.drive_voltage_peak * libm::sin(2.0 * PI * self.drive_frequency * t)
        } else {
            0.0
        }
    }

    /// Per-rod effective magnetic field, T.
    pub fn rod_b_eff(&self, index: usize, quad: Quadrature) -> Result<f64> {
        match self.b_eff_override {
            Some(b) => Ok(b),
            None => self.rods[index].effective_field(quad),
        }
    }
}

/// Electric field of the first rod at time `t`, V/m.
pub fn drive_waveform(t: f64, assembly: &RodAssembly) -> f64 {
    let gap = assembly.rods.first().map_or(f64::NAN, |r| r.electrode_gap);
    assembly.drive_voltage(t) / gap
}

/// Summary of an assembly's fields.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AssemblyFields {
    /// Length-weighted mean per-rod effective field, T.
    pub b_eff: f64,
    /// Rod count times `b_eff`, T.
    pub b_eff_rod_sum: f64,
    /// Length-weighted rms electrode field during "on" spans, V/m.
    pub e_rms: f64,
    /// Sum of rod lengths, m.
    pub l_fields: f64,
    /// Orientation-weighted rod length `sum s_i L_i`, m.
    pub l_signed: f64,
}

pub fn assembly_fields(assembly: &RodAssembly, quad: Quadrature) -> Result<AssemblyFields> {
    assembly.validate()?;
    let mut l_fields = 0.0;
    let mut l_signed = 0.0;
    let mut b_sum = 0.0;
    let mut e_sum = 0.0;
    for (i, rod) in assembly.rods.iter().enumerate() {
        let e_peak = electrode_field(assembly.drive_voltage_peak, rod.electrode_gap)?;
        l_fields += rod.length;
        l_signed += f64::from(assembly.orientation_signs[i]) * rod.length;
        b_sum += rod.length * assembly.rod_b_eff(i, quad)?;
        e_sum += rod.length * e_peak.abs() / SQRT_2;
    }
    let b_eff = b_sum / l_fields;
    Ok(AssemblyFields {
        b_eff,
        b_eff_rod_sum: b_eff * assembly.rods.len() as f64,
        e_rms: e_sum / l_fields,
        l_fields,
        l_signed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn profile_anchor_points() {
        let g = RodGeometry::default();
        assert_eq!(magnetic_profile(0.0, &g), 0.185);
        let edge = 0.5 * g.plateau_span;
        assert_relative_eq!(
            magnetic_profile(edge + 1e-12, &g),
            0.98 * 0.185,
            max_relative = 1e-9
        );
        assert_relative_eq!(
            magnetic_profile(-(edge + g.ramp_span), &g),
            0.01 * 0.185,
            max_relative = 1e-12
        );
        assert!(magnetic_profile(1.0, &g) < 1e-30);
    }

    #[test]
    fn rod_b_eff_within_two_percent() {
        let b = RodGeometry::default()
            .effective_field(Quadrature::default())
            .unwrap();
        assert!((b - 0.185).abs() / 0.185 <= 0.02, "{b}");
    }

    #[test]
    fn uniform_and_half_profiles() {
        let q = Quadrature::default();
        let b = effective_field(|_| 0.185, (0.0, 0.2), 0.2, q).unwrap();
        assert_relative_eq!(b, 0.185, max_relative = 1e-12);
        let g = RodGeometry::default();
        let full = effective_field(|z| magnetic_profile(z, &g), (-0.1, 0.1), 0.2, q).unwrap();
        let half = effective_field(|z| 0.5 * magnetic_profile(z, &g), (-0.1, 0.1), 0.2, q).unwrap();
        assert_relative_eq!(half, 0.5 * full, max_relative = 1e-14);
        assert!(effective_field(|_| 1.0, (0.0, 1.0), 0.0, q).is_err());
    }

    #[test]
    fn electrode_values() {
        assert_relative_eq!(
            electrode_field(2000.0, 4e-3).unwrap(),
            5e5,
            max_relative = 1e-15
        );
        assert_eq!(electrode_field(0.0, 4e-3).unwrap(), 0.0);
        assert!(electrode_field(1.0, 0.0).is_err());
    }

    #[test]
    fn drive_gating() {
        let a = RodAssembly::default();
        // quarter cycle of 300 Hz inside the first (on) half of T_AM
        let t_peak = 1.0 / (4.0 * 300.0);
        assert_relative_eq!(drive_waveform(t_peak, &a), 5e5, max_relative = 1e-12);
        assert_eq!(drive_waveform(15.0 + t_peak, &a), 0.0);
        assert_relative_eq!(drive_waveform(20.0 + t_peak, &a), 5e5, max_relative = 1e-9);
    }

    #[test]
    fn drive_rms_over_on_half() {
        let a = RodAssembly::default();
        let n = 100_000;
        let span = 0.5 * a.gate_period;
        let ms: f64 = (0..n)
            .map(|k| {
                let e = drive_waveform((k as f64 + 0.5) * span / n as f64, &a);
                e * e
            })
            .sum::<f64>()
            / n as f64;
        assert_relative_eq!(libm::sqrt(ms), 5e5 / SQRT_2, max_relative = 1e-3);
    }

    #[test]
    fn assembly_summaries() {
        let four = assembly_fields(&RodAssembly::default(), Quadrature::default()).unwrap();
        assert_relative_eq!(four.l_fields, 0.8, max_relative = 1e-12);
        let one = assembly_fields(&RodAssembly::with_rods(1), Quadrature::default()).unwrap();
        assert_relative_eq!(one.l_fields, 0.2, max_relative = 1e-12);
        assert!((one.b_eff - 0.185).abs() / 0.185 <= 0.02);
        assert_relative_eq!(one.e_rms, 3.5e5, max_relative = 0.011);
        assert_relative_eq!(four.b_eff_rod_sum, 4.0 * four.b_eff, max_relative = 1e-15);
        assert!(matches!(
            assembly_fields(&RodAssembly::with_rods(0), Quadrature::default()),
            Err(Error::Empty(_))
        ));
        let over = RodAssembly {
            b_eff_override: Some(0.85),
            ..RodAssembly::default()
        };
        assert_eq!(
            assembly_fields(&over, Quadrature::default()).unwrap().b_eff,
            0.85
        );
    }

    #[test]
    fn assembly_validation() {
        let mut a = RodAssembly {
            drive_voltage_peak: 2500.0,
            ..RodAssembly::default()
        };
        assert!(a.validate().is_err());
        a = RodAssembly::default();
        a.drive_frequency = 1000.0;
        assert!(a.validate().is_err());
        a.allow_out_of_band = true;
        assert!(a.validate().is_ok());
        assert_eq!(a.warnings().len(), 1);
        a.orientation_signs[0] = 0;
        assert!(a.validate().is_err());
    }

    #[test]
    fn offset_factor() {
        let g = RodGeometry::default();
        assert_eq!(transverse_offset_factor(0.0, &g).unwrap(), 1.0);
        assert_relative_eq!(
            transverse_offset_factor(1e-3, &g).unwrap(),
            1.01,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            transverse_offset_factor(-1e-3, &g).unwrap(),
            1.01,
            max_relative = 1e-12
        );
        assert!(transverse_offset_factor(3e-3, &g).is_err());
    }
}
