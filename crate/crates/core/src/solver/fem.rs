//! Piecewise-affine functions on a disc mesh and weak-form assembly.

use super::mesh::DiscDomain;
use super::sparse::Csr;
use crate::field::VectorField;
use crate::geom::{Mat2, PlaneVec};
use rayon::prelude::*;
use std::sync::Arc;

/// Nodal values with their exact per-triangle gradients.
#[derive(Clone, Debug)]
pub struct GridFunction {
    pub domain: Arc<DiscDomain>,
    pub values: Vec<f64>,
    pub gradients: Vec<PlaneVec>,
}

/// Gradient of the affine interpolant on each triangle.
pub fn triangle_gradients(domain: &DiscDomain, values: &[f64]) -> Vec<PlaneVec> {
    domain
        .triangles
        .iter()
        .zip(&domain.shape_grads)
        .map(|(t, g)| g[0] * values[t[0]] + g[1] * values[t[1]] + g[2] * values[t[2]])
        .collect()
}

/// Degree-5 seven-point rule on the reference triangle: barycentric points and weights summing to 1.
fn seven_point_rule() -> [([f64; 3], f64); 7] {
    let s15 = 15f64.sqrt();
    let a1 = (6.0 - s15) / 21.0;
    let a2 = (6.0 + s15) / 21.0;
    let w1 = (155.0 - s15) / 1200.0;
    let w2 = (155.0 + s15) / 1200.0;
    [
        ([1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0], 9.0 / 40.0),
        ([a1, a1, 1.0 - 2.0 * a1], w1),
        ([a1, 1.0 - 2.0 * a1, a1], w1),
        ([1.0 - 2.0 * a1, a1, a1], w1),
        ([a2, a2, 1.0 - 2.0 * a2], w2),
        ([a2, 1.0 - 2.0 * a2, a2], w2),
        ([1.0 - 2.0 * a2, a2, a2], w2),
    ]
}

impl GridFunction {
    pub fn new(domain: Arc<DiscDomain>, values: Vec<f64>) -> Self {
        let gradients = triangle_gradients(&domain, &values);
        GridFunction { domain, values, gradients }
    }

    pub fn interpolate(domain: Arc<DiscDomain>, f: impl Fn(PlaneVec) -> f64) -> Self {
        let values = domain.nodes.iter().map(|&p| f(p)).collect();
        Self::new(domain, values)
    }

    pub fn gradient(&self, t: usize) -> PlaneVec {
        self.gradients[t]
    }

    /// `max_T |∇u_T|`.
    pub fn lipschitz_estimate(&self) -> f64 {
        self.gradients.iter().map(|g| g.norm()).fold(0.0, f64::max)
    }

    /// `max |∇u_T|` over triangles with centroid in `B_r`.
    pub fn interior_lipschitz(&self, r: f64) -> f64 {
        self.gradients
            .iter()
            .zip(&self.domain.centroids)
            .filter(|(_, c)| c.norm() < r)
            .map(|(g, _)| g.norm())
            .fold(0.0, f64::max)
    }

    /// `‖u_h − u‖_{L²}` with a degree-5 rule per triangle.
    pub fn l2_error(&self, exact: impl Fn(PlaneVec) -> f64 + Sync) -> f64 {
        let rule = seven_point_rule();
        let d = &self.domain;
        (0..d.triangles.len())
            .into_par_iter()
            .map(|k| {
                let t = d.triangles[k];
                let p = t.map(|i| d.nodes[i]);
                let mut s = 0.0;
                for (b, w) in &rule {
                    let x = p[0] * b[0] + p[1] * b[1] + p[2] * b[2];
                    let uh = self.values[t[0]] * b[0] + self.values[t[1]] * b[1] + self.values[t[2]] * b[2];
                    let e = uh - exact(x);
                    s += w * e * e;
                }
                s * d.areas[k]
            })
            .collect::<Vec<f64>>()
            .iter()
            .sum::<f64>()
            .sqrt()
    }

    /// `‖∇u_h − ∇u‖_{L²}` over triangles with centroid in `B_r`.
    pub fn h1_seminorm_error(&self, exact_grad: impl Fn(PlaneVec) -> PlaneVec + Sync, r: f64) -> f64 {
        let rule = seven_point_rule();
        let d = &self.domain;
        (0..d.triangles.len())
            .into_par_iter()
            .filter(|&k| d.centroids[k].norm() < r)
            .map(|k| {
                let p = d.triangles[k].map(|i| d.nodes[i]);
                let mut s = 0.0;
                for (b, w) in &rule {
                    let x = p[0] * b[0] + p[1] * b[1] + p[2] * b[2];
                    s += w * (self.gradients[k] - exact_grad(x)).norm_sq();
                }
                s * d.areas[k]
            })
            .collect::<Vec<f64>>()
            .iter()
            .sum::<f64>()
            .sqrt()
    }

    /// `‖∇(u − w)‖_{L²}` over triangles with centroid in `B_r`; both on the same mesh.
    pub fn h1_distance(&self, other: &GridFunction, r: f64) -> f64 {
        let d = &self.domain;
        self.gradients
            .iter()
            .zip(&other.gradients)
            .enumerate()
            .filter(|(k, _)| d.centroids[*k].norm() < r)
            .map(|(k, (a, b))| (*a - *b).norm_sq() * d.areas[k])
            .sum::<f64>()
            .sqrt()
    }

    /// `‖∇u‖²_{L²}` over the whole mesh.
    pub fn dirichlet_energy(&self) -> f64 {
        self.gradients.iter().zip(&self.domain.areas).map(|(g, a)| g.norm_sq() * a).sum()
    }

    /// Copy with the gauge `u(node) = 0`.
    pub fn gauged(&self, node: usize) -> GridFunction {
        let c = self.values[node];
        GridFunction::new(self.domain.clone(), self.values.iter().map(|v| v - c).collect())
    }
}

/// Interior-unknown numbering and matrix patterns shared by all solves on one mesh.
pub struct Layout {
    pub domain: Arc<DiscDomain>,
    /// Unknown index per node, `usize::MAX` for boundary nodes.
    pub unknown: Vec<usize>,
    pub interior: Vec<usize>,
    pattern: Vec<Vec<usize>>,
}

impl Layout {
    pub fn new(domain: Arc<DiscDomain>) -> Self {
        let fixed = domain.is_boundary.clone();
        Self::with_fixed(domain, &fixed)
    }

    /// Layout whose unknowns are the nodes with `fixed[i] == false`.
    pub fn with_fixed(domain: Arc<DiscDomain>, fixed: &[bool]) -> Self {
        let mut unknown = vec![usize::MAX; domain.nodes.len()];
        let mut interior = Vec::new();
        for i in 0..domain.nodes.len() {
            if !fixed[i] {
                unknown[i] = interior.len();
                interior.push(i);
            }
        }
        let adj = domain.adjacency();
        let pattern = interior
            .iter()
            .map(|&i| adj[i].iter().filter_map(|&j| (unknown[j] != usize::MAX).then_some(unknown[j])).collect())
            .collect();
        Layout { domain, unknown, interior, pattern }
    }

    pub fn n(&self) -> usize {
        self.interior.len()
    }

    pub fn empty_matrix(&self) -> Csr {
        Csr::from_pattern(&self.pattern)
    }

    /// Stiffness matrix of the Laplacian on interior unknowns.
    pub fn stiffness(&self) -> Csr {
        self.assemble_matrix(&vec![Mat2::IDENTITY; self.domain.triangles.len()])
    }

    /// `Σ_T |T| ⟨A_T ∇φ_j, ∇φ_i⟩` over interior `i, j`.
    fn assemble_matrix(&self, mats: &[Mat2]) -> Csr {
        let d = &self.domain;
        let mut a = self.empty_matrix();
        for (k, t) in d.triangles.iter().enumerate() {
            let g = &d.shape_grads[k];
            let area = d.areas[k];
            for p in 0..3 {
                let ui = self.unknown[t[p]];
                if ui == usize::MAX {
                    continue;
                }
                for q in 0..3 {
                    let uj = self.unknown[t[q]];
                    if uj == usize::MAX {
                        continue;
                    }
                    a.add(ui, uj, area * mats[k].apply(g[q]).dot(g[p]));
                }
            }
        }
        a
    }

    /// Weak residual `R_i = Σ_T |T| ⟨G(∇u_T), ∇φ_i⟩` for every node (boundary rows included).
    pub fn residual_full(&self, fluxes: &[PlaneVec]) -> Vec<f64> {
        let d = &self.domain;
        let mut r = vec![0.0; d.nodes.len()];
        for (k, t) in d.triangles.iter().enumerate() {
            let g = &d.shape_grads[k];
            for p in 0..3 {
                r[t[p]] += d.areas[k] * fluxes[k].dot(g[p]);
            }
        }
        r
    }

    /// Interior restriction of the weak residual.
    pub fn residual(&self, fluxes: &[PlaneVec]) -> Vec<f64> {
        let full = self.residual_full(fluxes);
        self.interior.iter().map(|&i| full[i]).collect()
    }

    /// Field values at the triangle gradients.
    pub fn fluxes(&self, field: &dyn VectorField, grads: &[PlaneVec]) -> Vec<PlaneVec> {
        grads.par_iter().map(|&g| field.eval(g)).collect()
    }

    /// Field values and Jacobians at the triangle gradients.
    pub fn fluxes_and_jacobians(&self, field: &dyn VectorField, grads: &[PlaneVec]) -> (Vec<PlaneVec>, Vec<Mat2>) {
        grads.par_iter().map(|&g| (field.eval(g), field.jacobian(g))).unzip()
    }

    /// Newton matrix `Σ_T |T| ⟨DG(∇u_T) ∇φ_j, ∇φ_i⟩`.
    pub fn jacobian_matrix(&self, jacobians: &[Mat2]) -> Csr {
        self.assemble_matrix(jacobians)
    }

    /// Scatter interior unknowns into a full nodal vector.
    pub fn scatter(&self, full: &mut [f64], x: &[f64]) {
        for (k, &i) in self.interior.iter().enumerate() {
            full[i] = x[k];
        }
    }

    pub fn gather(&self, full: &[f64]) -> Vec<f64> {
        self.interior.iter().map(|&i| full[i]).collect()
    }
}

/// `max_i |R_i|`.
pub fn max_norm(r: &[f64]) -> f64 {
    r.iter().fold(0.0, |m, v| m.max(v.abs()))
}

pub fn l2_norm(r: &[f64]) -> f64 {
    r.iter().map(|v| v * v).sum::<f64>().sqrt()
}
