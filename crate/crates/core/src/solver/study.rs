//! Solves along a decreasing list of mollification parameters.

use super::fem::GridFunction;
use super::nonlinear::{SolveOptions, SolveReport, SolverContext};
use crate::duality::{mollify, MollifierSpec};
use crate::error::{invalid, Result};
use crate::field::MonotoneField;
use serde::{Deserialize, Serialize};

/// Radius of the interior ball used for distances and gradient bounds.
pub const STUDY_RADIUS: f64 = 0.5;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StudyEntry {
    pub eps: f64,
    pub converged: bool,
    pub residual_norm: f64,
    pub iterations: usize,
    /// `max |∇u_ε|` over triangles centered in the interior ball.
    pub interior_lipschitz: f64,
    pub failure: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StudyReport {
    pub field: String,
    pub radius: f64,
    pub entries: Vec<StudyEntry>,
    /// `‖∇(u_{ε_k} − u_{ε_{k+1}})‖_{L²(B_r)}` for consecutive pairs.
    pub increments: Vec<f64>,
    /// Full matrix of pairwise distances.
    pub pairwise: Vec<Vec<f64>>,
    pub increments_decreasing: bool,
    pub lipschitz_bound: f64,
    pub complete: bool,
}

/// Solves with `mollify(field, ε)` for each `ε`, warm-starting each solve from the previous one.
pub fn approximation_study(
    ctx: &SolverContext,
    field: &MonotoneField,
    boundary: &(dyn Fn(f64) -> f64 + Sync),
    eps_list: &[f64],
    opts: &SolveOptions,
) -> Result<(StudyReport, Vec<GridFunction>)> {
    if eps_list.is_empty() || eps_list.iter().any(|e| !(*e > 0.0 && *e < 1.0)) || eps_list.windows(2).any(|w| w[1] >= w[0]) {
        return Err(invalid("eps list must be strictly decreasing in (0, 1)"));
    }
    let mut entries = Vec::new();
    let mut solutions: Vec<GridFunction> = Vec::new();
    let mut warm: Option<Vec<f64>> = None;
    for &eps in eps_list {
        let smooth = mollify(field, &MollifierSpec::new(eps, opts.kernel_order)?)?;
        let o = SolveOptions { initial: warm.clone(), continuation: Vec::new(), ..opts.clone() };
        let (u, rep): (GridFunction, SolveReport) = ctx.solve_partial(&smooth, boundary, &o);
        let failure = (!rep.converged).then(|| format!("residual {:e} above {:e}", rep.residual_norm, rep.tol));
        entries.push(StudyEntry {
            eps,
            converged: rep.converged,
            residual_norm: rep.residual_norm,
            iterations: rep.iterations,
            interior_lipschitz: u.interior_lipschitz(STUDY_RADIUS),
            failure,
        });
        warm = Some(u.values.clone());
        solutions.push(u);
    }
    let n = solutions.len();
    let mut pairwise = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let dist = solutions[i].h1_distance(&solutions[j], STUDY_RADIUS);
            pairwise[i][j] = dist;
            pairwise[j][i] = dist;
        }
    }
    let increments: Vec<f64> = (0..n.saturating_sub(1)).map(|i| pairwise[i][i + 1]).collect();
    let increments_decreasing = increments.windows(2).all(|w| w[1] < w[0]);
    let lipschitz_bound = entries.iter().map(|e| e.interior_lipschitz).fold(0.0, f64::max);
    let complete = entries.iter().all(|e| e.converged);
    let report = StudyReport {
        field: field.label(),
        radius: STUDY_RADIUS,
        entries,
        increments,
        pairwise,
        increments_decreasing,
        lipschitz_bound,
        complete,
    };
    Ok((report, solutions))
}
