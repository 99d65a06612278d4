//! Equivalence of crossed-field linear birefringence and parallel-field
//! Jones birefringence, carried out on 2x2 index tensors.
//!
//! The transverse polarization plane is spanned by `x` (horizontal) and `y`
//! (vertical); light propagates along `+z`, towards the observer, so positive
//! angles are counterclockwise.

use alloc::format;
use core::f64::consts::{FRAC_PI_2, FRAC_PI_4};

use crate::error::{Error, Result};
use crate::units::rem_euclid;

pub type Vec2 = [f64; 2];

/// Symmetric 2x2 index perturbation on the polarization plane.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SymTensor2 {
    pub xx: f64,
    pub yy: f64,
    pub xy: f64,
}

impl SymTensor2 {
    pub const ZERO: SymTensor2 = SymTensor2 {
        xx: 0.0,
        yy: 0.0,
        xy: 0.0,
    };

    pub fn new(xx: f64, yy: f64, xy: f64) -> Self {
        Self { xx, yy, xy }
    }

    pub fn plus(self, o: Self) -> Self {
        Self::new(self.xx + o.xx, self.yy + o.yy, self.xy + o.xy)
    }

    pub fn minus(self, o: Self) -> Self {
        self.plus(o.scale(-1.0))
    }

    pub fn scale(self, k: f64) -> Self {
        Self::new(self.xx * k, self.yy * k, self.xy * k)
    }

    /// Largest absolute component.
    pub fn norm(self) -> f64 {
        self.xx.abs().max(self.yy.abs()).max(self.xy.abs())
    }

    /// Index seen by light polarized at `angle` (rad) from `x`.
    pub fn along(self, angle: f64) -> f64 {
        let (s, c) = libm::sincos(angle);
        self.xx * c * c + self.yy * s * s + 2.0 * self.xy * s * c
    }

    /// Tensor with the frame rotated by `angle`: `R T R^T`.
    pub fn rotated(self, angle: f64) -> Self {
        let (s, c) = libm::sincos(angle);
        Self::new(
            c * c * self.xx - 2.0 * s * c * self.xy + s * s * self.yy,
            s * s * self.xx + 2.0 * s * c * self.xy + c * c * self.yy,
            s * c * (self.xx - self.yy) + (c * c - s * s) * self.xy,
        )
    }

    /// Angle (rad, in `(-pi/2, pi/2]`) of the eigenaxis with the larger index.
    pub fn principal_angle(self) -> f64 {
        0.5 * libm::atan2(2.0 * self.xy, self.xx - self.yy)
    }

    /// Difference of the two eigenvalues (>= 0).
    pub fn eigen_split(self) -> f64 {
        libm::hypot(self.xx - self.yy, 2.0 * self.xy)
    }
}

/// Index perturbation produced by transverse fields `e` and `b`.
pub trait Response {
    fn tensor(&self, e: Vec2, b: Vec2) -> SymTensor2;
}

impl<F> Response for F
where
    F: Fn(Vec2, Vec2) -> SymTensor2,
{
    fn tensor(&self, e: Vec2, b: Vec2) -> SymTensor2 {
        self(e, b)
    }
}

/// General bilinear response: `T(E, B) = sum_ij E_i B_j C_ij`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BilinearResponse {
    coeffs: [[SymTensor2; 2]; 2],
}

fn rot90(v: Vec2) -> Vec2 {
    [-v[1], v[0]]
}

fn dot(a: Vec2, b: Vec2) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

/// Traceless symmetric part of `a (x) b`.
fn sym_traceless(a: Vec2, b: Vec2) -> SymTensor2 {
    let half_trace = 0.5 * dot(a, b);
    SymTensor2::new(
        a[0] * b[0] - half_trace,
        a[1] * b[1] - half_trace,
        0.5 * (a[0] * b[1] + a[1] * b[0]),
    )
}

impl BilinearResponse {
    pub fn zero() -> Self {
        Self::default()
    }

    /// Samples any response on the basis field pairs.
    pub fn from_response<R: Response + ?Sized>(r: &R) -> Self {
        let basis = [[1.0, 0.0], [0.0, 1.0]];
        let mut coeffs = [[SymTensor2::ZERO; 2]; 2];
        for (i, e) in basis.iter().enumerate() {
            for (j, b) in basis.iter().enumerate() {
                coeffs[i][j] = r.tensor(*e, *b);
            }
        }
        Self { coeffs }
    }

    /// Isotropic-medium response with `n_B - n_E = delta_n_melb` for crossed
    /// unit fields: `dn * sym_traceless(E, J B)` with `J` the +90 deg rotation.
    pub fn isotropic(delta_n_melb: f64) -> Self {
        Self::from_response(&move |e: Vec2, b: Vec2| sym_traceless(e, rot90(b)).scale(delta_n_melb))
    }

    /// Adds polarization-independent index shifts `a (E.B) + c (E.JB)`.
    pub fn with_isotropic_shift(self, a: f64, c: f64) -> Self {
        let extra = Self::from_response(&move |e: Vec2, b: Vec2| {
            let s = a * dot(e, b) + c * dot(e, rot90(b));
            SymTensor2::new(s, s, 0.0)
        });
        self.plus(&extra)
    }

    /// Adds a birefringence with axes along/orthogonal to parallel fields.
    pub fn with_parallel_axis_term(self, mu: f64) -> Self {
        let extra = Self::from_response(&move |e: Vec2, b: Vec2| sym_traceless(e, b).scale(mu));
        self.plus(&extra)
    }

    pub fn plus(&self, other: &Self) -> Self {
        let mut out = *self;
        for i in 0..2 {
            for j in 0..2 {
                out.coeffs[i][j] = self.coeffs[i][j].plus(other.coeffs[i][j]);
            }
        }
        out
    }
}

impl Response for BilinearResponse {
    fn tensor(&self, e: Vec2, b: Vec2) -> SymTensor2 {
        let mut t = SymTensor2::ZERO;
        for (row, ei) in self.coeffs.iter().zip(e) {
            for (c, bj) in row.iter().zip(b) {
                t = t.plus(c.scale(ei * bj));
            }
        }
        t
    }
}

/// Outcome of the four-step equivalence construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EquivalenceReport {
    /// `n_B - n_E` of the initial crossed configuration.
    pub delta_n_melb: f64,
    /// `n_{+45} - n_{-45}` of the final parallel configuration.
    pub delta_n_jones: f64,
    /// Direction of the final, parallel fields (rad from `x`).
    pub field_angle: f64,
    /// Eigenaxes relative to the fields (rad); `None` for a degenerate tensor.
    pub eigenaxes: Option<(f64, f64)>,
    /// Distance of the eigenaxes from +-45 deg (rad).
    pub axis_error: Option<f64>,
    /// Mismatch between the rotated configuration and the rotated tensor.
    pub rotation_residual: f64,
    /// Difference between the superposed tensor and the response evaluated
    /// directly at the summed fields.
    pub cross_term_residual: f64,
    /// Final tensor.
    pub tensor: SymTensor2,
}

impl EquivalenceReport {
    pub fn holds(&self, rel_tol: f64, angle_tol: f64) -> bool {
        let scale = self.delta_n_melb.abs().max(f64::MIN_POSITIVE);
        let value_ok = (self.delta_n_jones - self.delta_n_melb).abs() <= rel_tol * scale
            || (self.delta_n_melb == 0.0 && self.delta_n_jones == 0.0);
        let axes_ok = self.axis_error.is_none_or(|e| e <= angle_tol);
        value_ok && axes_ok
    }
}

const CHECK_REL_TOL: f64 = 1e-9;

const SAMPLE_FIELDS: [(Vec2, Vec2); 3] = [
    ([0.3, -1.2], [0.7, 0.4]),
    ([-0.9, 0.25], [1.1, -0.6]),
    ([1.7, 0.8], [-0.2, 1.3]),
];

fn close(a: SymTensor2, b: SymTensor2, scale: f64) -> bool {
    a.minus(b).norm() <= CHECK_REL_TOL * scale
}

fn check_bilinear<R: Response + ?Sized>(r: &R, scale: f64) -> Result<()> {
    for (k, &(e, b)) in SAMPLE_FIELDS.iter().enumerate() {
        let base = r.tensor(e, b);
        for &(alpha, beta) in &[(2.5, 1.0), (1.0, -0.4), (-3.0, 0.7)] {
            let scaled = r.tensor([alpha * e[0], alpha * e[1]], [beta * b[0], beta * b[1]]);
            if !close(
                scaled,
                base.scale(alpha * beta),
                scale * (alpha * beta).abs().max(1.0),
            ) {
                return Err(Error::NotBilinear(format!(
                    "scaling E by {alpha} and B by {beta} at sample {k}"
                )));
            }
        }
        let (e2, b2) = SAMPLE_FIELDS[(k + 1) % SAMPLE_FIELDS.len()];
        let sum_e = r.tensor([e[0] + e2[0], e[1] + e2[1]], b);
        if !close(sum_e, base.plus(r.tensor(e2, b)), 4.0 * scale) {
            return Err(Error::NotBilinear(format!(
                "not additive in E at sample {k}"
            )));
        }
        let sum_b = r.tensor(e, [b[0] + b2[0], b[1] + b2[1]]);
        if !close(sum_b, base.plus(r.tensor(e, b2)), 4.0 * scale) {
            return Err(Error::NotBilinear(format!(
                "not additive in B at sample {k}"
            )));
        }
    }
    Ok(())
}

fn check_parallel_premise<R: Response + ?Sized>(r: &R, scale: f64) -> Result<()> {
    for k in 0..8 {
        let phi = k as f64 * FRAC_PI_4 / 2.0;
        let (s, c) = libm::sincos(phi);
        let t = r.tensor([c, s], [c, s]);
        let axial = t.along(phi) - t.along(phi + FRAC_PI_2);
        if axial.abs() > CHECK_REL_TOL * scale {
            return Err(Error::ParallelAxisTerm(axial));
        }
    }
    Ok(())
}

/// Runs the construction on response `r`:
///
/// 1. crossed fields `E = x`, `B = y` give `n_B - n_E`;
/// 2. rotating both fields by 90 deg swaps the vertical and horizontal indices;
/// 3. inverting `B` flips the sign of the bilinear response;
/// 4. superposing 1 and 3 yields parallel fields along the diagonal;
/// 5. renormalising the fields to unit magnitude leaves a birefringence with
///    eigenaxes at +-45 deg to the fields.
///
/// Fails if `r` is not bilinear or if it has a birefringence with axes along
/// or orthogonal to parallel fields.
pub fn verify_equivalence_construction<R: Response + ?Sized>(r: &R) -> Result<EquivalenceReport> {
    let x = [1.0, 0.0];
    let y = [0.0, 1.0];
    let scale = BilinearResponse::from_response(r)
        .coeffs
        .iter()
        .flatten()
        .map(|t| t.norm())
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE);
    check_bilinear(r, scale)?;
    check_parallel_premise(r, scale)?;

    // (a) crossed fields
    let (e_a, b_a) = (x, y);
    let t_a = r.tensor(e_a, b_a);
    let delta_n_melb = t_a.yy - t_a.xx;

    // (b) both fields rotated by +90 deg
    let (e_b, b_b) = (rot90(e_a), rot90(b_a));
    let t_b = r.tensor(e_b, b_b);
    let rotation_residual = t_b.minus(t_a.rotated(FRAC_PI_2)).norm();

    // (c) B inverted
    let b_c = [-b_b[0], -b_b[1]];
    let t_c = r.tensor(e_b, b_c);

    // (d) superposition of (a) and (c): E and B both along x + y
    let e_d = [e_a[0] + e_b[0], e_a[1] + e_b[1]];
    let b_d = [b_a[0] + b_c[0], b_a[1] + b_c[1]];
    let t_d = t_a.plus(t_c);
    let field_angle = libm::atan2(e_d[1], e_d[0]);

    // (e) renormalised to unit fields
    let norm = libm::hypot(e_d[0], e_d[1]) * libm::hypot(b_d[0], b_d[1]);
    let t_e = t_d.scale(1.0 / norm);
    let direct = r.tensor(
        [
            e_d[0] / libm::hypot(e_d[0], e_d[1]),
            e_d[1] / libm::hypot(e_d[0], e_d[1]),
        ],
        [
            b_d[0] / libm::hypot(b_d[0], b_d[1]),
            b_d[1] / libm::hypot(b_d[0], b_d[1]),
        ],
    );
    let cross_term_residual = direct.minus(t_e).norm();

    let delta_n_jones = t_e.along(field_angle + FRAC_PI_4) - t_e.along(field_angle - FRAC_PI_4);

    let split = t_e.eigen_split();
    let (eigenaxes, axis_error) = if split > CHECK_REL_TOL * scale {
        let rel = rem_euclid(t_e.principal_angle() - field_angle, FRAC_PI_2);
        let other = rel - FRAC_PI_2;
        (Some((rel, other)), Some((rel - FRAC_PI_4).abs()))
    } else {
        (None, None)
    };

    Ok(EquivalenceReport {
        delta_n_melb,
        delta_n_jones,
        field_angle,
        eigenaxes,
        axis_error,
        rotation_residual,
        cross_term_residual,
        tensor: t_e,
    })
}
