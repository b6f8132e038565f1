//! Nonlinear Dirichlet solves: damped Newton, then Riesz-preconditioned relaxation, then
//! energy descent for gradient fields.

use super::fem::{l2_norm, max_norm, GridFunction, Layout};
use super::mesh::DiscDomain;
use super::sparse::{gmres, solve as linear_solve, Csr, Ilu0};
use crate::duality::{mollify, MollifierSpec};
use crate::error::{invalid, Error, Result};
use crate::field::{MonotoneField, VectorField, DEFAULT_KERNEL_ORDER};
use crate::geom::PlaneVec;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    Newton,
    Picard,
    EnergyDescent,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    /// Target for `max_i |R_i|`.
    pub tol: f64,
    pub max_newton: usize,
    pub max_picard: usize,
    pub max_energy: usize,
    /// Mollification levels solved first, each warm-starting the next.
    pub continuation: Vec<f64>,
    pub kernel_order: usize,
    /// Full nodal initial guess; boundary entries are overwritten.
    #[serde(skip)]
    pub initial: Option<Vec<f64>>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            tol: 1e-10,
            max_newton: 60,
            max_picard: 400,
            max_energy: 400,
            continuation: Vec::new(),
            kernel_order: DEFAULT_KERNEL_ORDER,
            initial: None,
        }
    }
}

impl SolveOptions {
    pub fn with_tol(tol: f64) -> Self {
        SolveOptions { tol, ..Default::default() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContinuationStep {
    pub eps: f64,
    pub residual_norm: f64,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub residual_norm: f64,
    pub iterations: usize,
    pub strategy: Strategy,
    /// `max_T |∇u_T|`.
    pub lipschitz_estimate: f64,
    pub converged: bool,
    pub tol: f64,
    pub history: Vec<f64>,
    pub continuation: Vec<ContinuationStep>,
}

/// Potential `F` with `∇F = G`, when available.
type PotentialRef<'a> = Option<&'a (dyn Fn(PlaneVec) -> f64 + Send + Sync)>;

struct Problem<'a> {
    field: &'a dyn VectorField,
    potential: PotentialRef<'a>,
    layout: &'a Layout,
    stiffness: &'a Csr,
    riesz: &'a Ilu0,
}

impl Problem<'_> {
    fn residual(&self, u: &[f64]) -> Vec<f64> {
        let grads = super::fem::triangle_gradients(&self.layout.domain, u);
        self.layout.residual(&self.layout.fluxes(self.field, &grads))
    }

    /// `K⁻¹ r`, the Riesz representative of the residual.
    fn riesz(&self, r: &[f64]) -> Vec<f64> {
        let mut w = vec![0.0; r.len()];
        let stats = gmres(self.stiffness, r, &mut w, self.riesz, 1e-13, 60, 2000);
        if !stats.converged {
            if let Some(x) = linear_solve(self.stiffness, r, 1e-13) {
                return x;
            }
        }
        w
    }

    /// `‖r‖_{K⁻¹}`.
    fn merit(&self, r: &[f64]) -> f64 {
        let w = self.riesz(r);
        r.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>().max(0.0).sqrt()
    }

    fn energy(&self, u: &[f64]) -> f64 {
        let f = self.potential.expect("energy needs a potential");
        let grads = super::fem::triangle_gradients(&self.layout.domain, u);
        let terms: Vec<f64> = grads.par_iter().zip(self.layout.domain.areas.par_iter()).map(|(g, a)| f(*g) * a).collect();
        terms.iter().sum()
    }

    fn step(&self, u: &[f64], d: &[f64], alpha: f64) -> Vec<f64> {
        let mut v = u.to_vec();
        for (k, &i) in self.layout.interior.iter().enumerate() {
            v[i] += alpha * d[k];
        }
        v
    }
}

struct Run {
    u: Vec<f64>,
    history: Vec<f64>,
    iterations: usize,
    strategy: Strategy,
    residual: f64,
}

fn newton(p: &Problem, run: &mut Run, tol: f64, max_iter: usize) -> bool {
    let mut mu = 0.0f64;
    let mut r = p.residual(&run.u);
    let mut res = max_norm(&r);
    for _ in 0..max_iter {
        if res <= tol {
            break;
        }
        let grads = super::fem::triangle_gradients(&p.layout.domain, &run.u);
        let (_, jacs) = p.layout.fluxes_and_jacobians(p.field, &grads);
        let jm = p.layout.jacobian_matrix(&jacs);
        let merit0 = p.merit(&r);
        let neg: Vec<f64> = r.iter().map(|v| -v).collect();
        let mut accepted = false;
        for _ in 0..12 {
            let mut a = jm.clone();
            if mu > 0.0 {
                a.axpy_same_pattern(mu, p.stiffness);
            }
            let Some(d) = linear_solve(&a, &neg, 1e-12) else {
                mu = if mu == 0.0 { 1e-8 } else { mu * 10.0 };
                continue;
            };
            let mut alpha = 1.0;
            while alpha > 1e-6 {
                let trial = p.step(&run.u, &d, alpha);
                let rt = p.residual(&trial);
                let mt = p.merit(&rt);
                if mt < (1.0 - 1e-4 * alpha) * merit0 || max_norm(&rt) <= tol {
                    run.u = trial;
                    r = rt;
                    accepted = true;
                    break;
                }
                alpha *= 0.5;
            }
            if accepted {
                mu = if alpha == 1.0 { mu * 0.1 } else { mu };
                if mu < 1e-12 {
                    mu = 0.0;
                }
                break;
            }
            mu = if mu == 0.0 { 1e-8 } else { mu * 10.0 };
        }
        run.iterations += 1;
        res = max_norm(&r);
        run.history.push(res);
        if !accepted {
            break;
        }
    }
    run.residual = res;
    res <= tol
}

/// `u ← u − τ K⁻¹ R(u)` with an adaptive step on the dual-norm merit, or on the energy.
fn relaxation(p: &Problem, run: &mut Run, tol: f64, max_iter: usize, energy: bool) -> bool {
    let mut r = p.residual(&run.u);
    let mut res = max_norm(&r);
    let mut tau = 1.0f64;
    let mut stalls = 0;
    for _ in 0..max_iter {
        if res <= tol {
            break;
        }
        let w = p.riesz(&r);
        let neg: Vec<f64> = w.iter().map(|v| -v).collect();
        let base = if energy { p.energy(&run.u) } else { p.merit(&r) };
        let slope = r.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>();
        let mut accepted = false;
        for _ in 0..40 {
            let trial = p.step(&run.u, &neg, tau);
            let rt = p.residual(&trial);
            let ok = if energy {
                p.energy(&trial) <= base - 1e-4 * tau * slope
            } else {
                p.merit(&rt) < base
            };
            if ok {
                run.u = trial;
                r = rt;
                accepted = true;
                tau = (tau * 1.5).min(1e6);
                break;
            }
            tau *= 0.5;
        }
        run.iterations += 1;
        res = max_norm(&r);
        run.history.push(res);
        if !accepted {
            stalls += 1;
            tau = 1.0;
            if stalls > 3 {
                break;
            }
        }
    }
    run.residual = res;
    res <= tol
}

fn boundary_values(domain: &DiscDomain, boundary: &(dyn Fn(f64) -> f64 + Sync)) -> Vec<(usize, f64)> {
    domain.boundary_nodes.iter().map(|&i| (i, boundary(domain.nodes[i].arg()))).collect()
}

/// Discrete harmonic extension of the boundary values already stored in `u`.
pub fn harmonic_extension(layout: &Layout, stiffness: &Csr, u: &mut [f64]) {
    for &i in &layout.interior {
        u[i] = 0.0;
    }
    let grads = super::fem::triangle_gradients(&layout.domain, u);
    let r = layout.residual(&grads);
    let neg: Vec<f64> = r.iter().map(|v| -v).collect();
    if let Some(x) = linear_solve(stiffness, &neg, 1e-14) {
        layout.scatter(u, &x);
    }
}

/// Runs the strategy ladder from a full nodal vector whose boundary entries are final.
fn ladder(field: &dyn VectorField, potential: PotentialRef, layout: &Layout, stiffness: &Csr, riesz: &Ilu0, u0: Vec<f64>, opts: &SolveOptions) -> Run {
    let p = Problem { field, potential, layout, stiffness, riesz };
    let mut run = Run { u: u0, history: Vec::new(), iterations: 0, strategy: Strategy::Newton, residual: f64::INFINITY };
    let r0 = p.residual(&run.u);
    run.residual = max_norm(&r0);
    run.history.push(run.residual);
    if run.residual <= opts.tol || newton(&p, &mut run, opts.tol, opts.max_newton) {
        return run;
    }
    run.strategy = Strategy::Picard;
    if relaxation(&p, &mut run, opts.tol, opts.max_picard, false) {
        return run;
    }
    // Relaxation may leave Newton a better starting point.
    run.strategy = Strategy::Newton;
    if newton(&p, &mut run, opts.tol, opts.max_newton) {
        return run;
    }
    if potential.is_some() {
        run.strategy = Strategy::EnergyDescent;
        relaxation(&p, &mut run, opts.tol, opts.max_energy, true);
        if run.residual > opts.tol {
            newton(&p, &mut run, opts.tol, opts.max_newton);
        }
    }
    run
}

/// Shared factorizations for repeated solves on one mesh.
pub struct SolverContext {
    pub layout: Layout,
    pub stiffness: Csr,
    riesz: Ilu0,
}

impl SolverContext {
    pub fn new(domain: Arc<DiscDomain>) -> Result<Self> {
        let layout = Layout::new(domain);
        let stiffness = layout.stiffness();
        let riesz = Ilu0::new(&stiffness).ok_or_else(|| invalid("stiffness matrix has a zero pivot"))?;
        Ok(SolverContext { layout, stiffness, riesz })
    }

    pub fn domain(&self) -> &Arc<DiscDomain> {
        &self.layout.domain
    }

    /// Solves with the boundary entries of `u0` as Dirichlet data; never fails, reports instead.
    pub fn solve_values(&self, field: &MonotoneField, u0: Vec<f64>, opts: &SolveOptions) -> (GridFunction, SolveReport) {
        let mut u = u0;
        let mut steps = Vec::new();
        for &eps in &opts.continuation {
            let spec = MollifierSpec { epsilon: eps, kernel_order: opts.kernel_order };
            let Ok(smooth) = mollify(field, &spec) else { continue };
            let pot = smooth.potential_fn();
            let run = ladder(&smooth, pot.as_deref(), &self.layout, &self.stiffness, &self.riesz, u.clone(), opts);
            steps.push(ContinuationStep { eps, residual_norm: run.residual, iterations: run.iterations, converged: run.residual <= opts.tol });
            if run.residual.is_finite() {
                u = run.u;
            }
        }
        let pot = field.potential_fn();
        let run = ladder(field, pot.as_deref(), &self.layout, &self.stiffness, &self.riesz, u, opts);
        let g = GridFunction::new(self.layout.domain.clone(), run.u);
        let report = SolveReport {
            residual_norm: run.residual,
            iterations: run.iterations,
            strategy: run.strategy,
            lipschitz_estimate: g.lipschitz_estimate(),
            converged: run.residual <= opts.tol,
            tol: opts.tol,
            history: run.history,
            continuation: steps,
        };
        (g, report)
    }

    /// Boundary data from an angle function; initial guess from `opts` or the harmonic extension.
    pub fn solve_partial(&self, field: &MonotoneField, boundary: &(dyn Fn(f64) -> f64 + Sync), opts: &SolveOptions) -> (GridFunction, SolveReport) {
        let d = &self.layout.domain;
        let mut u = match &opts.initial {
            Some(v) if v.len() == d.nodes.len() => v.clone(),
            _ => vec![0.0; d.nodes.len()],
        };
        for (i, v) in boundary_values(d, boundary) {
            u[i] = v;
        }
        if opts.initial.is_none() {
            harmonic_extension(&self.layout, &self.stiffness, &mut u);
        }
        self.solve_values(field, u, opts)
    }

    pub fn solve(&self, field: &MonotoneField, boundary: &(dyn Fn(f64) -> f64 + Sync), opts: &SolveOptions) -> Result<(GridFunction, SolveReport)> {
        let (g, report) = self.solve_partial(field, boundary, opts);
        if report.converged {
            Ok((g, report))
        } else {
            Err(Error::SolveFailed {
                message: format!(
                    "residual {:e} above tolerance {:e} after {} iterations ({:?}); mollify or relax the tolerance",
                    report.residual_norm, report.tol, report.iterations, report.strategy
                ),
                history: report.history,
            })
        }
    }

    /// `max_i |R_i|` for a given grid function.
    pub fn residual_norm(&self, field: &dyn VectorField, u: &GridFunction) -> f64 {
        max_norm(&self.layout.residual(&self.layout.fluxes(field, &u.gradients)))
    }

    pub fn residual_l2(&self, field: &dyn VectorField, u: &GridFunction) -> f64 {
        l2_norm(&self.layout.residual(&self.layout.fluxes(field, &u.gradients)))
    }
}

/// Solves `div G(∇u) = 0` in the unit disc with `u = boundary(θ)` on the circle.
pub fn solve_dirichlet(
    field: &MonotoneField,
    domain: Arc<DiscDomain>,
    boundary: &(dyn Fn(f64) -> f64 + Sync),
    opts: &SolveOptions,
) -> Result<(GridFunction, SolveReport)> {
    SolverContext::new(domain)?.solve(field, boundary, opts)
}
