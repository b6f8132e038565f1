//! The linear equation `f_z̄ = μ f_z + ν conj(f_z)` with `|μ| + |ν| = 1`.
//!
//! Both real and imaginary parts of a solution can be nonconstant unless
//! `(μ, ν) = (0, ±1)`; otherwise an affine solution with both parts nonconstant exists.

use super::ComplexVal;
use crate::error::{invalid, Result};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Which part of every solution is forced to be constant.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConstantPart {
    Re,
    Im,
    None,
}

/// `f(x, y) = (ux x + uy y) + i (vx x + vy y)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AffineMap {
    pub ux: f64,
    pub uy: f64,
    pub vx: f64,
    pub vy: f64,
}

impl AffineMap {
    /// `f_z = ((u_x + v_y) + i (v_x − u_y)) / 2`.
    pub fn f_z(&self) -> ComplexVal {
        Complex64::new(self.ux + self.vy, self.vx - self.uy) * 0.5
    }

    /// `f_z̄ = ((u_x − v_y) + i (v_x + u_y)) / 2`.
    pub fn f_zbar(&self) -> ComplexVal {
        Complex64::new(self.ux - self.vy, self.vx + self.uy) * 0.5
    }

    /// `|f_z̄ − μ f_z − ν conj(f_z)|`.
    pub fn residual(&self, mu: ComplexVal, nu: ComplexVal) -> f64 {
        let fz = self.f_z();
        (self.f_zbar() - mu * fz - nu * fz.conj()).norm()
    }

    pub fn u_nonconstant(&self) -> bool {
        self.ux != 0.0 || self.uy != 0.0
    }

    pub fn v_nonconstant(&self) -> bool {
        self.vx != 0.0 || self.vy != 0.0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearBeltramiVerdict {
    pub mu: ComplexVal,
    pub nu: ComplexVal,
    pub forces_constancy: bool,
    pub constant_part: ConstantPart,
    pub counterexample: Option<AffineMap>,
    /// Equation residual of the counterexample, when present.
    pub residual: Option<f64>,
}

const UNIT_TOL: f64 = 1e-12;

/// Real 2×4 system acting on `(u_x, u_y, v_x, v_y)`.
///
/// Row 0 is the real part and row 1 the imaginary part of `f_z̄ − μ f_z − ν conj(f_z) = 0`
/// (times 2). For real coefficients it reduces to
/// `(1 − μ − ν) u_x = (1 + μ + ν) v_y` and `(1 + μ − ν) u_y = −(1 − μ + ν) v_x`.
pub fn linear_system(mu: ComplexVal, nu: ComplexVal) -> [[f64; 4]; 2] {
    let (mr, mi, nr, ni) = (mu.re, mu.im, nu.re, nu.im);
    [
        [1.0 - (mr + nr), -(mi - ni), mi - ni, -1.0 - (mr + nr)],
        [-(mi + ni), 1.0 + (mr - nr), 1.0 - (mr - nr), -(mi + ni)],
    ]
}

/// Orthonormal basis of the null space of a 2×4 matrix.
fn null_space(m: [[f64; 4]; 2]) -> Vec<[f64; 4]> {
    // Gram-Schmidt the rows, then project the unit vectors onto the complement.
    let mut rows: Vec<[f64; 4]> = Vec::new();
    for r in m {
        let mut v = r;
        for q in &rows {
            let d: f64 = (0..4).map(|k| v[k] * q[k]).sum();
            for k in 0..4 {
                v[k] -= d * q[k];
            }
        }
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-12 {
            rows.push(v.map(|x| x / n));
        }
    }
    let mut basis: Vec<[f64; 4]> = Vec::new();
    for k in 0..4 {
        let mut v = [0.0; 4];
        v[k] = 1.0;
        for q in rows.iter().chain(basis.iter()) {
            let d: f64 = (0..4).map(|j| v[j] * q[j]).sum();
            for j in 0..4 {
                v[j] -= d * q[j];
            }
        }
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-8 {
            basis.push(v.map(|x| x / n));
        }
    }
    basis
}

fn is_real(c: ComplexVal) -> bool {
    c.im == 0.0
}

/// Affine solution from the case split on `a = 1 − μ − ν`, `b = 1 + μ + ν`,
/// `c = 1 + μ − ν`, `d = 1 − μ + ν` of the real system `a u_x = b v_y`, `c u_y = −d v_x`.
fn real_case_split(mu: f64, nu: f64) -> AffineMap {
    let (a, b, c, d) = (1.0 - mu - nu, 1.0 + mu + nu, 1.0 + mu - nu, 1.0 - mu + nu);
    if a != 0.0 && b != 0.0 {
        // u = (b/a) x, v = y.
        AffineMap { ux: b / a, uy: 0.0, vx: 0.0, vy: 1.0 }
    } else if a != 0.0 {
        // b = 0 forces v_y = 0.
        if c == 0.0 {
            AffineMap { ux: 0.0, uy: 1.0, vx: 0.0, vy: 1.0 }
        } else {
            AffineMap { ux: 0.0, uy: -d / c, vx: 1.0, vy: 0.0 }
        }
    } else if d != 0.0 {
        // a = 0 frees u_x; c ≠ 0 here since a and c cannot both vanish.
        AffineMap { ux: 0.0, uy: -d / c, vx: 1.0, vy: 0.0 }
    } else {
        AffineMap { ux: 1.0, uy: 0.0, vx: 1.0, vy: 0.0 }
    }
}

/// Decides whether the equation forces a constant real or imaginary part.
pub fn linear_analyze(mu: ComplexVal, nu: ComplexVal) -> Result<LinearBeltramiVerdict> {
    let total = mu.norm() + nu.norm();
    if !((total - 1.0).abs() <= UNIT_TOL) {
        return Err(invalid(format!("|mu| + |nu| must equal 1, got {total}")));
    }
    let basis = null_space(linear_system(mu, nu));
    let u_rank = basis.iter().any(|v| v[0].abs() > 1e-9 || v[1].abs() > 1e-9);
    let v_rank = basis.iter().any(|v| v[2].abs() > 1e-9 || v[3].abs() > 1e-9);
    let constant_part = match (u_rank, v_rank) {
        (false, _) => ConstantPart::Re,
        (_, false) => ConstantPart::Im,
        _ => ConstantPart::None,
    };
    let forces_constancy = constant_part != ConstantPart::None;
    let counterexample = if forces_constancy {
        None
    } else if is_real(mu) && is_real(nu) {
        Some(real_case_split(mu.re, nu.re))
    } else {
        // Some vector of the span has both parts nonzero: if x has u-part and y has
        // v-part but each lacks the other, x + y has both.
        let x = basis.iter().find(|v| v[0].abs() > 1e-9 || v[1].abs() > 1e-9).copied().unwrap();
        let y = basis.iter().find(|v| v[2].abs() > 1e-9 || v[3].abs() > 1e-9).copied().unwrap();
        let has_both = |v: &[f64; 4]| (v[0].abs() > 1e-9 || v[1].abs() > 1e-9) && (v[2].abs() > 1e-9 || v[3].abs() > 1e-9);
        let pick = if has_both(&x) {
            x
        } else if has_both(&y) {
            y
        } else {
            [x[0] + y[0], x[1] + y[1], x[2] + y[2], x[3] + y[3]]
        };
        Some(AffineMap { ux: pick[0], uy: pick[1], vx: pick[2], vy: pick[3] })
    };
    let residual = counterexample.map(|f| f.residual(mu, nu));
    Ok(LinearBeltramiVerdict { mu, nu, forces_constancy, constant_part, counterexample, residual })
}
