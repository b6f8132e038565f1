//! Sampled ellipticity atlases, bad-set detection, coverings with a Lebesgue number,
//! and the quantitative localization radius.

use crate::error::{invalid, Error, Result};
use crate::field::{quotients_from_difference, VectorField};
use crate::geom::{PlaneVec, Rect};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};

/// Relative tolerance applied to every threshold comparison.
pub const DEFAULT_TOLERANCE: f64 = 0.05;
/// Minimum number of offset directions per scale.
pub const MIN_DIRECTIONS: usize = 16;
/// A quantity "blows up" across scales when the finest value exceeds the coarsest by this factor.
pub const BLOWUP_RATIO: f64 = 10.0;
/// Margin turning the strict radius inequality into a definite gap.
pub const DEFAULT_SAFETY: f64 = 0.5;

/// Extremes of the quotients at one scale.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScaleRecord {
    pub scale: f64,
    /// Minimum of `q_lower` over directions.
    pub lambda_hat: f64,
    /// Maximum of `1 / q_upper_inv` over directions.
    #[serde(rename = "Lambda_hat")]
    pub upper_hat: f64,
    /// Maximum of `q_lower` over directions.
    pub stilde_hat: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellRecord {
    pub center: PlaneVec,
    pub lambda_hat: f64,
    #[serde(rename = "Lambda_hat")]
    pub upper_hat: f64,
    pub per_scale: Vec<ScaleRecord>,
}

/// Quotient extremes on a regular grid of base points.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EllipticityProfile {
    #[serde(rename = "box")]
    pub bounds: Rect,
    pub grid_step: f64,
    /// Grid nodes per axis.
    pub nx: usize,
    pub ny: usize,
    pub scales: Vec<f64>,
    pub directions: usize,
    /// Row-major, `x` fastest.
    pub cells: Vec<CellRecord>,
}

fn upper_of(q_upper_inv: f64) -> f64 {
    if q_upper_inv.is_infinite() {
        0.0
    } else if q_upper_inv <= 0.0 {
        f64::INFINITY
    } else {
        1.0 / q_upper_inv
    }
}

fn validate_scales(scales: &[f64]) -> Result<()> {
    if scales.is_empty() {
        return Err(invalid("scale list is empty"));
    }
    if scales.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
        return Err(invalid("scales must be positive and finite"));
    }
    if scales.windows(2).any(|w| w[1] >= w[0]) {
        return Err(invalid("scales must be strictly decreasing"));
    }
    Ok(())
}

/// Quotient scan at one base point; offsets at `2πk/n` for each scale.
pub fn sample_point(field: &dyn VectorField, base: PlaneVec, scales: &[f64], directions: usize) -> CellRecord {
    let g0 = field.eval(base);
    let mut per_scale = Vec::with_capacity(scales.len());
    for &s in scales {
        let mut rec = ScaleRecord { scale: s, lambda_hat: f64::INFINITY, upper_hat: 0.0, stilde_hat: f64::NEG_INFINITY };
        for k in 0..directions {
            let off = PlaneVec::polar(s, TAU * k as f64 / directions as f64);
            let diff = field.eval(base + off) - g0;
            let (ql, qu) = quotients_from_difference(diff, off);
            rec.lambda_hat = rec.lambda_hat.min(ql);
            rec.stilde_hat = rec.stilde_hat.max(ql);
            rec.upper_hat = rec.upper_hat.max(upper_of(qu));
        }
        per_scale.push(rec);
    }
    let lambda_hat = per_scale.iter().map(|r| r.lambda_hat).fold(f64::INFINITY, f64::min);
    let upper_hat = per_scale.iter().map(|r| r.upper_hat).fold(0.0, f64::max);
    CellRecord { center: base, lambda_hat, upper_hat, per_scale }
}

/// Coordinate of node `i` of `n + 1` equally spaced nodes on `[lo, hi]`, exact at the midpoint
/// of symmetric intervals.
fn node_coord(lo: f64, hi: f64, i: usize, n: usize) -> f64 {
    if n == 0 {
        return 0.5 * (lo + hi);
    }
    (lo * (n - i) as f64 + hi * i as f64) / n as f64
}

impl EllipticityProfile {
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    pub fn cell(&self, i: usize, j: usize) -> &CellRecord {
        &self.cells[self.index(i, j)]
    }

    /// Grid indices of the node nearest to `p`, or `None` outside the box.
    pub fn nearest(&self, p: PlaneVec) -> Option<(usize, usize)> {
        if !self.bounds.contains(p) {
            return None;
        }
        let fx = (p.x - self.bounds.x_min) / (self.bounds.x_max - self.bounds.x_min) * (self.nx - 1).max(1) as f64;
        let fy = (p.y - self.bounds.y_min) / (self.bounds.y_max - self.bounds.y_min) * (self.ny - 1).max(1) as f64;
        Some(((fx.round() as usize).min(self.nx - 1), (fy.round() as usize).min(self.ny - 1)))
    }

    /// Nearest-node record.
    pub fn lookup(&self, p: PlaneVec) -> Option<&CellRecord> {
        self.nearest(p).map(|(i, j)| self.cell(i, j))
    }

    /// Per-cell `lambda_hat ≤ Lambda_hat` up to rounding.
    pub fn ordering_holds(&self) -> bool {
        self.cells.iter().all(|c| c.lambda_hat <= c.upper_hat * (1.0 + 1e-12) || c.upper_hat.is_nan())
    }
}

/// Samples quotient extremes over every grid node of `bounds`.
pub fn sample_ellipticity(
    field: &dyn VectorField,
    bounds: Rect,
    grid_step: f64,
    scales: &[f64],
    directions: usize,
) -> Result<EllipticityProfile> {
    validate_scales(scales)?;
    if !bounds.is_valid() {
        return Err(invalid("profile box is empty or not finite"));
    }
    if !(grid_step.is_finite() && grid_step > 0.0) {
        return Err(invalid("grid step must be positive"));
    }
    if directions < MIN_DIRECTIONS {
        return Err(invalid(format!("at least {MIN_DIRECTIONS} offset directions are required")));
    }
    let mx = ((bounds.x_max - bounds.x_min) / grid_step).round().max(1.0) as usize;
    let my = ((bounds.y_max - bounds.y_min) / grid_step).round().max(1.0) as usize;
    if (mx + 1) * (my + 1) > 4_000_000 {
        return Err(invalid("profile grid is too large"));
    }
    let cells: Vec<CellRecord> = (0..(mx + 1) * (my + 1))
        .into_par_iter()
        .map(|k| {
            let (i, j) = (k % (mx + 1), k / (mx + 1));
            let p = PlaneVec::new(node_coord(bounds.x_min, bounds.x_max, i, mx), node_coord(bounds.y_min, bounds.y_max, j, my));
            sample_point(field, p, scales, directions)
        })
        .collect();
    Ok(EllipticityProfile {
        bounds,
        grid_step: (bounds.x_max - bounds.x_min) / mx as f64,
        nx: mx + 1,
        ny: my + 1,
        scales: scales.to_vec(),
        directions,
        cells,
    })
}

/// One connected cluster of flagged cells.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BadComponent {
    pub size: usize,
    pub centroid: PlaneVec,
    /// Centroid snapped to the nearest grid node.
    pub representative: PlaneVec,
    pub cells: Vec<PlaneVec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BadSet {
    pub lambda_floor: f64,
    #[serde(rename = "Lambda_ceil")]
    pub upper_ceil: f64,
    pub tolerance: f64,
    pub scales: Vec<f64>,
    pub components: Vec<BadComponent>,
}

impl BadSet {
    pub fn flagged(&self) -> impl Iterator<Item = PlaneVec> + '_ {
        self.components.iter().flat_map(|c| c.cells.iter().copied())
    }

    pub fn len(&self) -> usize {
        self.components.iter().map(|c| c.size).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn centers(&self) -> Vec<PlaneVec> {
        self.components.iter().map(|c| c.representative).collect()
    }
}

/// Cells that are both degenerate and singular, grouped by 8-connectivity.
///
/// A cell is flagged when `lambda_hat < lambda_floor·(1 + tol)` and
/// `Lambda_hat > Lambda_ceil·(1 − tol)`; the tolerance errs on the side of flagging.
pub fn detect_bad_set(profile: &EllipticityProfile, lambda_floor: f64, upper_ceil: f64) -> Result<BadSet> {
    detect_bad_set_with(profile, lambda_floor, upper_ceil, DEFAULT_TOLERANCE)
}

pub fn detect_bad_set_with(profile: &EllipticityProfile, lambda_floor: f64, upper_ceil: f64, tol: f64) -> Result<BadSet> {
    if !(lambda_floor > 0.0 && upper_ceil > 0.0) {
        return Err(invalid("bad-set thresholds must be positive"));
    }
    if !(0.0..1.0).contains(&tol) {
        return Err(invalid("tolerance must lie in [0, 1)"));
    }
    let flagged: Vec<bool> = profile
        .cells
        .iter()
        .map(|c| c.lambda_hat < lambda_floor * (1.0 + tol) && c.upper_hat > upper_ceil * (1.0 - tol))
        .collect();
    let (nx, ny) = (profile.nx, profile.ny);
    let mut label = vec![usize::MAX; flagged.len()];
    let mut components = Vec::new();
    for start in 0..flagged.len() {
        if !flagged[start] || label[start] != usize::MAX {
            continue;
        }
        let id = components.len();
        let mut stack = vec![start];
        label[start] = id;
        let mut members = Vec::new();
        while let Some(k) = stack.pop() {
            members.push(k);
            let (i, j) = ((k % nx) as isize, (k / nx) as isize);
            for dj in -1..=1 {
                for di in -1..=1 {
                    let (a, b) = (i + di, j + dj);
                    if a < 0 || b < 0 || a >= nx as isize || b >= ny as isize {
                        continue;
                    }
                    let q = b as usize * nx + a as usize;
                    if flagged[q] && label[q] == usize::MAX {
                        label[q] = id;
                        stack.push(q);
                    }
                }
            }
        }
        members.sort_unstable();
        let cells: Vec<PlaneVec> = members.iter().map(|&k| profile.cells[k].center).collect();
        let sum = cells.iter().fold(PlaneVec::ZERO, |acc, &p| acc + p);
        let centroid = sum * (1.0 / cells.len() as f64);
        let representative = profile.lookup(centroid).map(|c| c.center).unwrap_or(centroid);
        components.push(BadComponent { size: cells.len(), centroid, representative, cells });
    }
    Ok(BadSet { lambda_floor, upper_ceil, tolerance: tol, scales: profile.scales.clone(), components })
}

/// Resolution of the grid a covering was verified on.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationGrid {
    pub grid_step: f64,
    pub nodes_checked: usize,
    pub scales: Vec<f64>,
    pub directions: usize,
}

/// Verified covering of `B̄_{2M}` by `O_λ ∪ V_Λ ∪ ⋃ B_r(ξ_j)` at grid resolution.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoveringCertificate {
    #[serde(rename = "M")]
    pub m: f64,
    pub r: f64,
    pub lambda: f64,
    #[serde(rename = "Lambda")]
    pub upper: f64,
    pub bad_centers: Vec<PlaneVec>,
    /// Lebesgue number of the covering.
    pub eta: f64,
    pub verification_grid: VerificationGrid,
    /// Nodes of `B̄_{2M}` covered by each member kind.
    pub covered_by_o: usize,
    pub covered_by_v: usize,
    pub covered_by_balls: usize,
    pub tolerance: f64,
}

/// Which covering members contain a grid node, with the relative tolerance.
pub(crate) fn membership(cell: &CellRecord, lambda: f64, upper: f64) -> (bool, bool) {
    (cell.lambda_hat >= lambda * (1.0 - DEFAULT_TOLERANCE), cell.upper_hat <= upper * (1.0 + DEFAULT_TOLERANCE))
}

/// Verifies the covering and computes its Lebesgue number by erosion.
///
/// For each node of `B̄_{2M}` the depth in a member is the largest `k` such that all grid
/// nodes within `k·step` belong to it (balls use the exact distance). `η` is the minimum over
/// nodes of the best depth, times the step, capped strictly below `r`.
pub fn build_covering(
    profile: &EllipticityProfile,
    m: f64,
    r: f64,
    lambda: f64,
    upper: f64,
    centers: &[PlaneVec],
) -> Result<CoveringCertificate> {
    if !(m > 0.0 && r > 0.0 && lambda > 0.0 && upper > 0.0) {
        return Err(invalid("covering parameters M, r, lambda, Lambda must be positive"));
    }
    for (a, p) in centers.iter().enumerate() {
        for q in &centers[a + 1..] {
            if p.dist(*q) < 4.0 * r {
                return Err(invalid(format!("bad centers {p:?} and {q:?} are closer than 4r")));
            }
        }
    }
    let outer = 2.0 * m;
    let b = profile.bounds;
    if b.x_min > -outer || b.x_max < outer || b.y_min > -outer || b.y_max < outer {
        return Err(invalid("profile box does not contain the closed ball of radius 2M"));
    }
    let step = profile.grid_step;
    let (nx, ny) = (profile.nx, profile.ny);
    let members: Vec<(bool, bool)> = profile.cells.iter().map(|c| membership(c, lambda, upper)).collect();
    let in_ball = |p: PlaneVec| centers.iter().any(|c| p.dist(*c) < r);

    let targets: Vec<usize> = (0..profile.cells.len()).filter(|&k| profile.cells[k].center.norm() <= outer * (1.0 + 1e-12)).collect();
    let uncovered: Vec<PlaneVec> = targets
        .iter()
        .filter(|&&k| {
            let (o, v) = members[k];
            !(o || v || in_ball(profile.cells[k].center))
        })
        .map(|&k| profile.cells[k].center)
        .collect();
    if !uncovered.is_empty() {
        return Err(Error::CoveringFailure { uncovered });
    }

    // Largest k with k·step < r; the Lebesgue number must stay below r.
    let k_cap = {
        let mut k = (r / step).floor() as usize;
        while k > 0 && k as f64 * step >= r {
            k -= 1;
        }
        k
    };
    let depth_in = |k0: usize, pick: &dyn Fn(usize) -> bool| -> usize {
        let (i0, j0) = ((k0 % nx) as isize, (k0 / nx) as isize);
        let mut k = 0usize;
        while k < k_cap {
            let next = (k + 1) as isize;
            let rad2 = (next * next) as f64 * (1.0 + 1e-12);
            let mut ok = true;
            'ring: for dj in -next..=next {
                for di in -next..=next {
                    if ((di * di + dj * dj) as f64) > rad2 {
                        continue;
                    }
                    let (a, bb) = (i0 + di, j0 + dj);
                    if a < 0 || bb < 0 || a >= nx as isize || bb >= ny as isize || !pick(bb as usize * nx + a as usize) {
                        ok = false;
                        break 'ring;
                    }
                }
            }
            if !ok {
                break;
            }
            k += 1;
        }
        k
    };
    let depths: Vec<usize> = targets
        .par_iter()
        .map(|&k0| {
            let p = profile.cells[k0].center;
            let d_o = if members[k0].0 { depth_in(k0, &|q| members[q].0) } else { 0 };
            let d_v = if members[k0].1 { depth_in(k0, &|q| members[q].1) } else { 0 };
            let d_b = centers
                .iter()
                .map(|c| {
                    let room = r - p.dist(*c);
                    if room <= 0.0 {
                        0
                    } else {
                        (((room / step).ceil() as usize).saturating_sub(1)).min(k_cap)
                    }
                })
                .max()
                .unwrap_or(0);
            d_o.max(d_v).max(d_b)
        })
        .collect();
    let shallow: Vec<PlaneVec> = targets.iter().zip(&depths).filter(|(_, d)| **d == 0).map(|(&k, _)| profile.cells[k].center).collect();
    if !shallow.is_empty() {
        // Covered pointwise, but no grid ball around these nodes fits in a single member.
        return Err(Error::CoveringFailure { uncovered: shallow });
    }
    let eta = *depths.iter().min().unwrap_or(&0) as f64 * step;
    let count = |f: &dyn Fn(usize) -> bool| targets.iter().filter(|&&k| f(k)).count();
    Ok(CoveringCertificate {
        m,
        r,
        lambda,
        upper,
        bad_centers: centers.to_vec(),
        eta,
        verification_grid: VerificationGrid {
            grid_step: step,
            nodes_checked: targets.len(),
            scales: profile.scales.clone(),
            directions: profile.directions,
        },
        covered_by_o: count(&|k| members[k].0),
        covered_by_v: count(&|k| members[k].1),
        covered_by_balls: count(&|k| in_ball(profile.cells[k].center)),
        tolerance: DEFAULT_TOLERANCE,
    })
}

/// Inputs of a radius certificate besides the covering.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadiusInputs {
    /// `‖∇u‖_{L²(B₁)}`.
    pub grad_l2: f64,
    /// `‖G(∇u)‖_{L²(B₁)}`.
    pub g_grad_l2: f64,
    pub c0: f64,
    pub c_iter: f64,
    /// Lower bound for `ω_G(t)/t` on `[η/4, M + η]`.
    pub monotony_floor: f64,
    pub safety: f64,
}

impl RadiusInputs {
    pub fn new(grad_l2: f64, g_grad_l2: f64, monotony_floor: f64) -> Self {
        Self { grad_l2, g_grad_l2, c0: 1.0, c_iter: 1.0, monotony_floor, safety: DEFAULT_SAFETY }
    }
}

/// Quantitative localization radius, conditional on the constants `c0` and `c_iter`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadiusCertificate {
    pub delta_single: f64,
    pub ln_delta_single: f64,
    #[serde(rename = "K")]
    pub k: u64,
    /// `delta_single^K`; underflows to zero for realistic inputs, see `ln_delta_final`.
    pub delta_final: f64,
    pub ln_delta_final: f64,
    #[serde(rename = "C_O")]
    pub c_o: f64,
    #[serde(rename = "C_V")]
    pub c_v: f64,
    pub c0: f64,
    pub c_iter: f64,
    pub monotony_floor: f64,
    pub safety: f64,
    pub eta: f64,
    #[serde(rename = "M")]
    pub m: f64,
    pub note: String,
}

/// `C_O = c0 ‖G(∇u)‖²/λ²`, `C_V = c0 Λ² ‖∇u‖²`, `δ = (1 − safety)·exp(−32π max(C_O, C_V)/floor²)/2`,
/// `K = ⌈c_iter M²/η²⌉`, `δ_final = δ^K`. Logarithms are carried to survive underflow.
pub fn certified_radius(cert: &CoveringCertificate, inputs: &RadiusInputs) -> Result<RadiusCertificate> {
    let RadiusInputs { grad_l2, g_grad_l2, c0, c_iter, monotony_floor, safety } = *inputs;
    if !(monotony_floor > 0.0) {
        return Err(invalid("monotony floor must be positive"));
    }
    if !(grad_l2 > 0.0 && g_grad_l2 > 0.0 && c0 > 0.0 && c_iter > 0.0) {
        return Err(invalid("norms and constants must be positive"));
    }
    if !(0.0..1.0).contains(&safety) {
        return Err(invalid("safety factor must lie in [0, 1)"));
    }
    if !(cert.eta > 0.0 && cert.m > 0.0 && cert.lambda > 0.0 && cert.upper > 0.0) {
        return Err(invalid("covering certificate has nonpositive entries"));
    }
    let c_o = c0 / (cert.lambda * cert.lambda) * (g_grad_l2 * g_grad_l2);
    let c_v = c0 * (cert.upper * cert.upper) * (grad_l2 * grad_l2);
    let exponent = -32.0 * PI * c_o.max(c_v) / (monotony_floor * monotony_floor);
    let ln_delta_single = exponent - std::f64::consts::LN_2 + (1.0 - safety).ln();
    let delta_single = exponent.exp() / 2.0 * (1.0 - safety);
    let k = (c_iter * cert.m * cert.m / (cert.eta * cert.eta)).ceil().max(1.0) as u64;
    let ln_delta_final = k as f64 * ln_delta_single;
    let delta_final = delta_single.powf(k as f64);
    let mut note = String::from("conditional on (c0, c_iter); the O-side radius reuses the V-side exponential shape");
    if cert.bad_centers.is_empty() {
        note.push_str("; no bad centers");
    }
    Ok(RadiusCertificate {
        delta_single,
        ln_delta_single,
        k,
        delta_final,
        ln_delta_final,
        c_o,
        c_v,
        c0,
        c_iter,
        monotony_floor,
        safety,
        eta: cert.eta,
        m: cert.m,
        note,
    })
}

/// Per-point verdict of the inclusion audit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InclusionPoint {
    pub base: PlaneVec,
    /// Maximum of `q_lower` per scale (coarse to fine).
    pub stilde_side: Vec<f64>,
    /// Maximum of `1/q_upper_inv` per scale.
    pub s_side: Vec<f64>,
    pub stilde_blowup: bool,
    pub s_blowup: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InclusionAudit {
    pub scales: Vec<f64>,
    pub blowup_ratio: f64,
    pub points: Vec<InclusionPoint>,
    /// Points where the `S̃` side blows up but the `S` side stays bounded.
    pub violations: Vec<PlaneVec>,
    pub stilde_flags: Vec<PlaneVec>,
    pub s_flags: Vec<PlaneVec>,
}

fn blows_up(values: &[f64]) -> bool {
    match (values.first(), values.last()) {
        (Some(&a), Some(&b)) => b.is_infinite() || (b >= BLOWUP_RATIO * a.max(f64::MIN_POSITIVE) && b > 1.0),
        _ => false,
    }
}

/// Samples both upper-ellipticity quotients and flags points contradicting `S̃ ⊂ S`.
pub fn stilde_inclusion_audit(
    field: &dyn VectorField,
    bounds: Rect,
    grid_step: f64,
    scales: &[f64],
    directions: usize,
) -> Result<InclusionAudit> {
    let profile = sample_ellipticity(field, bounds, grid_step, scales, directions)?;
    let points: Vec<InclusionPoint> = profile
        .cells
        .iter()
        .map(|c| {
            let stilde_side: Vec<f64> = c.per_scale.iter().map(|r| r.stilde_hat).collect();
            let s_side: Vec<f64> = c.per_scale.iter().map(|r| r.upper_hat).collect();
            InclusionPoint { base: c.center, stilde_blowup: blows_up(&stilde_side), s_blowup: blows_up(&s_side), stilde_side, s_side }
        })
        .collect();
    let violations = points.iter().filter(|p| p.stilde_blowup && !p.s_blowup).map(|p| p.base).collect();
    let stilde_flags = points.iter().filter(|p| p.stilde_blowup).map(|p| p.base).collect();
    let s_flags = points.iter().filter(|p| p.s_blowup).map(|p| p.base).collect();
    Ok(InclusionAudit { scales: scales.to_vec(), blowup_ratio: BLOWUP_RATIO, points, violations, stilde_flags, s_flags })
}

/// Sampled check that `|D^ζG|/|ζ| ≤ Λ(1 + tol)` wherever the profile certifies `Λ_hat ≤ Λ`.
pub fn lipschitz_on_v(field: &dyn VectorField, profile: &EllipticityProfile, upper: f64, tol: f64) -> f64 {
    let mut worst: f64 = 0.0;
    for c in profile.cells.iter().filter(|c| c.upper_hat <= upper) {
        for s in &profile.scales {
            for k in 0..profile.directions {
                let off = PlaneVec::polar(*s, TAU * k as f64 / profile.directions as f64);
                let d = field.eval(c.center + off) - field.eval(c.center);
                worst = worst.max(d.norm() / s / (upper * (1.0 + tol)));
            }
        }
    }
    worst
}
