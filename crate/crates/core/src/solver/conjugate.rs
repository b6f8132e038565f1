//! Conjugate reconstruction: `v` with `∇v ≈ i·G(∇u)`.

use super::fem::{max_norm, GridFunction, Layout};
use super::nonlinear::{SolveOptions, SolveReport, SolverContext};
use super::sparse::solve as linear_solve;
use crate::field::{MonotoneField, VectorField};
use crate::geom::PlaneVec;
use serde::{Deserialize, Serialize};

/// Least-squares conjugate and its attained mismatch.
#[derive(Clone, Debug)]
pub struct Conjugate {
    pub v: GridFunction,
    /// `(Σ_T |T| |i·G(∇u_T) − ∇v_T|²)^{1/2}`.
    pub curl_defect: f64,
}

/// Minimizes `Σ_T |T| |i·G(∇u_T) − ∇v_T|²` over nodal `v` with `v(center) = 0`.
pub fn reconstruct_conjugate(field: &dyn VectorField, u: &GridFunction) -> Conjugate {
    let d = u.domain.clone();
    let target: Vec<PlaneVec> = u.gradients.iter().map(|&g| field.eval(g).rot()).collect();
    let mut fixed = vec![false; d.nodes.len()];
    fixed[d.center_node()] = true;
    let layout = Layout::with_fixed(d.clone(), &fixed);
    // Normal equations: Σ_T |T| ⟨∇v_T, ∇φ_i⟩ = Σ_T |T| ⟨t_T, ∇φ_i⟩.
    let rhs = layout.residual(&target);
    let k = layout.stiffness();
    let x = linear_solve(&k, &rhs, 1e-14).unwrap_or_else(|| vec![0.0; layout.n()]);
    let mut values = vec![0.0; d.nodes.len()];
    layout.scatter(&mut values, &x);
    let v = GridFunction::new(d.clone(), values);
    let curl_defect = target
        .iter()
        .zip(&v.gradients)
        .zip(&d.areas)
        .map(|((t, g), a)| (*t - *g).norm_sq() * a)
        .sum::<f64>()
        .sqrt();
    Conjugate { v, curl_defect }
}

/// `max_i |Σ_T |T| ⟨G(∇w_T), ∇φ_i⟩|` over interior nodes.
pub fn weak_residual(field: &dyn VectorField, w: &GridFunction) -> f64 {
    let layout = Layout::new(w.domain.clone());
    max_norm(&layout.residual(&layout.fluxes(field, &w.gradients)))
}

/// Conjugate diagnostics for one solved primal.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConjugateReport {
    pub curl_defect: f64,
    /// Dual weak residual of the least-squares conjugate.
    pub dual_residual_least_squares: f64,
    /// Dual weak residual after solving the dual problem with the least-squares trace.
    pub dual_residual: f64,
    pub primal_residual: f64,
    pub polish: Option<SolveReport>,
}

/// Re-solves `div G*(∇v) = 0` with the boundary trace of `v`, warm-started from `v`,
/// and re-gauges at the center node.
pub fn polish_conjugate(ctx: &SolverContext, dual: &MonotoneField, v: &GridFunction, tol: f64) -> (GridFunction, SolveReport) {
    let opts = SolveOptions::with_tol(tol);
    let (w, report) = ctx.solve_values(dual, v.values.clone(), &opts);
    (w.gauged(w.domain.center_node()), report)
}

/// Least-squares conjugate, its dual residual, and the polished dual solution.
pub fn conjugate_report(
    ctx: &SolverContext,
    field: &MonotoneField,
    dual: &MonotoneField,
    u: &GridFunction,
) -> (Conjugate, GridFunction, ConjugateReport) {
    let primal = ctx.residual_norm(field, u);
    let c = reconstruct_conjugate(field, u);
    let ls = weak_residual(dual, &c.v);
    let tol = primal.max(1e-13);
    let (w, rep) = polish_conjugate(ctx, dual, &c.v, tol);
    let dual_residual = weak_residual(dual, &w);
    let report = ConjugateReport {
        curl_defect: c.curl_defect,
        dual_residual_least_squares: ls,
        dual_residual,
        primal_residual: primal,
        polish: Some(rep),
    };
    (c, w, report)
}

#[cfg(test)]
mod tests {
    use super::super::mesh::build_disc_mesh;
    use super::super::nonlinear::solve_dirichlet;
    use super::*;
    use crate::duality::dual_field;
    use crate::field::{make_catalog_field, FieldSpec};
    use std::sync::Arc;

    #[test]
    fn conjugate_of_x_is_y() {
        let d = Arc::new(build_disc_mesh(1.0 / 8.0).unwrap());
        let u = GridFunction::interpolate(d.clone(), |p| p.x);
        let id = make_catalog_field(&FieldSpec::Identity).unwrap();
        let c = reconstruct_conjugate(&id, &u);
        assert!(c.curl_defect < 1e-12);
        for (p, v) in d.nodes.iter().zip(&c.v.values) {
            assert!((v - p.y).abs() < 1e-12);
        }
    }

    #[test]
    fn conjugate_twice_returns_minus_u() {
        let d = Arc::new(build_disc_mesh(1.0 / 16.0).unwrap());
        let f = make_catalog_field(&"rotational_gm(m=0.5)".parse().unwrap()).unwrap();
        let (u, _) = solve_dirichlet(&f, d.clone(), &|t: f64| (2.0 * t).cos() + 0.3 * t.sin(), &SolveOptions::default()).unwrap();
        let dual = dual_field(&f).unwrap();
        let v = reconstruct_conjugate(&f, &u).v;
        let w = reconstruct_conjugate(&dual, &v).v;
        let ug = u.gauged(d.center_node());
        let err = w.values.iter().zip(&ug.values).map(|(a, b)| (a + b).abs()).fold(0.0, f64::max);
        assert!(err < 0.05, "{err}");
    }

    #[test]
    fn polished_conjugate_solves_the_dual_problem() {
        let d = Arc::new(build_disc_mesh(1.0 / 8.0).unwrap());
        let ctx = SolverContext::new(d).unwrap();
        let id = make_catalog_field(&FieldSpec::Identity).unwrap();
        let (u, _) = ctx.solve(&id, &|t: f64| (2.0 * t).cos(), &SolveOptions::default()).unwrap();
        let dual = dual_field(&id).unwrap();
        let (_, _, rep) = conjugate_report(&ctx, &id, &dual, &u);
        assert!(rep.dual_residual <= 3.0 * rep.primal_residual.max(1e-13), "{rep:?}");
    }
}
