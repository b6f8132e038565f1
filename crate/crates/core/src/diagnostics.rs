//! Probes on solved instances: gradient images, the max/min principle for gradients,
//! Caccioppoli ratios and localization tables.

use crate::classify::{membership, EllipticityProfile};
use crate::error::{invalid, Result};
use crate::field::VectorField;
use crate::geom::{Mat2, PlaneVec};
use crate::solver::GridFunction;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

/// Gradient values over the triangles meeting `B_δ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GradientImage {
    pub radius: f64,
    pub points: Vec<PlaneVec>,
    pub diameter: f64,
}

/// Counterclockwise convex hull by the monotone chain.
pub fn convex_hull(points: &[PlaneVec]) -> Vec<PlaneVec> {
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let mut hull: Vec<PlaneVec> = Vec::with_capacity(2 * pts.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &PlaneVec>> = if pass == 0 { Box::new(pts.iter()) } else { Box::new(pts.iter().rev()) };
        for &p in iter {
            while hull.len() >= start + 2 && (hull[hull.len() - 1] - hull[hull.len() - 2]).cross(p - hull[hull.len() - 2]) <= 0.0 {
                hull.pop();
            }
            hull.push(p);
        }
        hull.pop();
    }
    hull
}

/// Largest pairwise distance in a finite set.
pub fn diameter(points: &[PlaneVec]) -> f64 {
    let hull = convex_hull(points);
    let mut best = 0.0f64;
    for i in 0..hull.len() {
        for j in i + 1..hull.len() {
            best = best.max(hull[i].dist(hull[j]));
        }
    }
    best
}

pub fn gradient_image(u: &GridFunction, delta: f64) -> Result<GradientImage> {
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(invalid(format!("radius must lie in (0, 1], got {delta}")));
    }
    let tris = u.domain.triangles_meeting_ball(delta);
    if tris.is_empty() {
        return Err(invalid(format!("no triangle meets the ball of radius {delta}")));
    }
    let points: Vec<PlaneVec> = tris.iter().map(|&k| u.gradients[k]).collect();
    let diameter = diameter(&points);
    Ok(GradientImage { radius: delta, points, diameter })
}

/// Tolerances of the max/min principle check, in units of `h·Lip`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaxMinOptions {
    pub alpha_factor: f64,
    pub band_factor: f64,
    /// Violation fraction accepted as a pass.
    pub max_fraction: f64,
}

impl Default for MaxMinOptions {
    fn default() -> Self {
        MaxMinOptions { alpha_factor: 2.0, band_factor: 2.0, max_fraction: 0.05 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaxMinReport {
    pub r: f64,
    pub alpha: f64,
    pub band: f64,
    pub cloud_size: f64,
    pub boundary_points: usize,
    pub violations: usize,
    pub violation_fraction: f64,
    pub pass: bool,
    /// Up to 64 offending boundary points.
    pub worst: Vec<PlaneVec>,
}

/// Uniform bucket grid for radius queries.
struct Buckets {
    cell: f64,
    map: HashMap<(i64, i64), Vec<usize>>,
}

impl Buckets {
    fn new(points: &[PlaneVec], cell: f64) -> Self {
        let mut map: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
        for (i, p) in points.iter().enumerate() {
            map.entry(Self::key(*p, cell)).or_default().push(i);
        }
        Buckets { cell, map }
    }

    fn key(p: PlaneVec, cell: f64) -> (i64, i64) {
        ((p.x / cell).floor() as i64, (p.y / cell).floor() as i64)
    }

    fn within(&self, points: &[PlaneVec], p: PlaneVec, r: f64) -> Vec<usize> {
        let reach = (r / self.cell).ceil() as i64;
        let (kx, ky) = Self::key(p, self.cell);
        let mut out = Vec::new();
        for dx in -reach..=reach {
            for dy in -reach..=reach {
                if let Some(ids) = self.map.get(&(kx + dx, ky + dy)) {
                    out.extend(ids.iter().copied().filter(|&i| points[i].dist(p) <= r));
                }
            }
        }
        out
    }
}

/// Vertices of the alpha shape: points lying on the rim of some open disc of radius
/// `alpha` that contains no point of the set.
pub fn alpha_boundary(pts: &[PlaneVec], alpha: f64) -> Vec<usize> {
    if alpha <= 0.0 {
        return (0..pts.len()).collect();
    }
    let buckets = Buckets::new(pts, alpha);
    let empty = |c: PlaneVec| buckets.within(pts, c, alpha).into_iter().all(|k| pts[k].dist(c) >= alpha * (1.0 - 1e-9));
    let mut out = Vec::new();
    for (i, &p) in pts.iter().enumerate() {
        let near: Vec<usize> = buckets.within(pts, p, 2.0 * alpha).into_iter().filter(|&j| pts[j].dist(p) > 1e-14).collect();
        let on_rim = near.is_empty()
            || near.iter().any(|&j| {
                let q = pts[j];
                let mid = (p + q) * 0.5;
                let half = p.dist(q) * 0.5;
                let off = (alpha * alpha - half * half).max(0.0).sqrt();
                let n = (q - p).rot() * (1.0 / (2.0 * half));
                [mid + n * off, mid - n * off].into_iter().any(empty)
            });
        if on_rim {
            out.push(i);
        }
    }
    out
}

/// Compares the alpha-shape boundary of the gradient cloud over `B_r` with the gradient
/// values on triangles crossing `∂B_r`.
pub fn maxmin_check(u: &GridFunction, r: f64, opts: &MaxMinOptions) -> Result<MaxMinReport> {
    if !(r > 0.0 && r < 1.0) {
        return Err(invalid(format!("radius must lie in (0, 1), got {r}")));
    }
    let d = &u.domain;
    let lip = u.lipschitz_estimate();
    let scale = d.h * lip;
    let alpha = opts.alpha_factor * scale;
    let band = opts.band_factor * scale;
    let inside = d.triangles_meeting_ball(r);
    let cloud: Vec<PlaneVec> = inside.iter().map(|&k| u.gradients[k]).collect();
    let rim: Vec<PlaneVec> = inside
        .iter()
        .filter(|&&k| d.triangles[k].iter().any(|&i| d.nodes[i].norm() >= r))
        .map(|&k| u.gradients[k])
        .collect();
    let cloud_size = diameter(&cloud);
    if cloud_size <= band || rim.is_empty() {
        return Ok(MaxMinReport { r, alpha, band, cloud_size, boundary_points: 0, violations: 0, violation_fraction: 0.0, pass: true, worst: Vec::new() });
    }
    let boundary = alpha_boundary(&cloud, alpha);
    let rim_buckets = Buckets::new(&rim, band);
    let bad: Vec<PlaneVec> = boundary
        .iter()
        .map(|&i| cloud[i])
        .filter(|&p| rim_buckets.within(&rim, p, band).is_empty())
        .collect();
    let fraction = if boundary.is_empty() { 0.0 } else { bad.len() as f64 / boundary.len() as f64 };
    Ok(MaxMinReport {
        r,
        alpha,
        band,
        cloud_size,
        boundary_points: boundary.len(),
        violations: bad.len(),
        violation_fraction: fraction,
        pass: fraction < opts.max_fraction,
        worst: bad.into_iter().take(64).collect(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    #[serde(rename = "O_lambda")]
    OLambda,
    #[serde(rename = "V_Lambda")]
    VLambda,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CacciopoliReport {
    pub side: Side,
    pub threshold: f64,
    pub lhs: f64,
    pub rhs_factor: f64,
    /// `lhs / rhs_factor`, or `None` when `rhs_factor = 0`.
    pub ratio: Option<f64>,
    /// Triangles of `B_{1/2}` whose gradient lies in the region.
    pub cells_in_region: usize,
    /// Triangles whose gradient fell outside the profile box.
    pub cells_unprofiled: usize,
}

/// Area-weighted nodal averages of per-triangle vectors.
fn recover(u: &GridFunction, values: &[PlaneVec]) -> Vec<PlaneVec> {
    let d = &u.domain;
    let mut acc = vec![PlaneVec::ZERO; d.nodes.len()];
    let mut w = vec![0.0; d.nodes.len()];
    for (k, t) in d.triangles.iter().enumerate() {
        for &i in t {
            acc[i] = acc[i] + values[k] * d.areas[k];
            w[i] += d.areas[k];
        }
    }
    acc.iter().zip(&w).map(|(a, w)| *a * (1.0 / w)).collect()
}

/// Per-triangle Jacobian of the piecewise-affine interpolant of recovered nodal vectors.
pub fn recovered_jacobians(u: &GridFunction, values: &[PlaneVec]) -> Vec<Mat2> {
    let d = &u.domain;
    let nodal = recover(u, values);
    d.triangles
        .iter()
        .zip(&d.shape_grads)
        .map(|(t, g)| {
            let dx = g[0] * nodal[t[0]].x + g[1] * nodal[t[1]].x + g[2] * nodal[t[2]].x;
            let dy = g[0] * nodal[t[0]].y + g[1] * nodal[t[1]].y + g[2] * nodal[t[2]].y;
            Mat2::new(dx.x, dx.y, dy.x, dy.y)
        })
        .collect()
}

/// Radius of the ball carrying the left-hand side.
pub const CACCIOPOLI_RADIUS: f64 = 0.5;

/// Left side over `B_{1/2} ∩ (∇u)⁻¹(region)` against the matching energy factor over the disc.
pub fn cacciopoli_ratio(u: &GridFunction, field: &dyn VectorField, side: Side, threshold: f64, profile: &EllipticityProfile) -> Result<CacciopoliReport> {
    if !(threshold > 0.0 && threshold.is_finite()) {
        return Err(invalid(format!("threshold must be positive, got {threshold}")));
    }
    let d = &u.domain;
    let fluxes: Vec<PlaneVec> = u.gradients.iter().map(|&g| field.eval(g)).collect();
    let second = match side {
        Side::OLambda => recovered_jacobians(u, &u.gradients),
        Side::VLambda => recovered_jacobians(u, &fluxes),
    };
    let (mut lhs, mut inside, mut unprofiled) = (0.0, 0, 0);
    for k in 0..d.triangles.len() {
        if d.centroids[k].norm() >= CACCIOPOLI_RADIUS {
            continue;
        }
        let Some(cell) = profile.lookup(u.gradients[k]) else {
            unprofiled += 1;
            continue;
        };
        let (in_o, in_v) = membership(cell, threshold, threshold);
        if (side == Side::OLambda && in_o) || (side == Side::VLambda && in_v) {
            inside += 1;
            lhs += second[k].frobenius().powi(2) * d.areas[k];
        }
    }
    let rhs_factor = match side {
        Side::OLambda => fluxes.iter().zip(&d.areas).map(|(g, a)| g.norm_sq() * a).sum::<f64>() / (threshold * threshold),
        Side::VLambda => threshold * threshold * u.dirichlet_energy(),
    };
    let ratio = (rhs_factor > 0.0).then(|| lhs / rhs_factor);
    Ok(CacciopoliReport { side, threshold, lhs, rhs_factor, ratio, cells_in_region: inside, cells_unprofiled: unprofiled })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LocalClass {
    Inside,
    Outside,
    Mixed,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LocalizationVerdict {
    Inside,
    Outside,
    /// The mixed class persists down to the smallest resolvable radius.
    Inconclusive,
    /// The gradient cloud over the disc meets `B_ρ(ξ₀)`.
    NotApplicable,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalizationRow {
    pub delta: f64,
    pub class: Option<LocalClass>,
    pub points: usize,
    /// Radius below the mesh floor `h`, not classified.
    pub below_mesh_floor: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalizationReport {
    pub xi0: PlaneVec,
    pub rho: f64,
    pub min_distance: f64,
    pub rows: Vec<LocalizationRow>,
    pub verdict: LocalizationVerdict,
}

/// Classifies the gradient cloud over `B_δ` against `B_{4ρ}(ξ₀)` and `B_{3ρ}(ξ₀)`.
pub fn classify_cloud(points: &[PlaneVec], xi0: PlaneVec, rho: f64) -> LocalClass {
    if points.iter().all(|p| p.dist(xi0) < 4.0 * rho) {
        LocalClass::Inside
    } else if points.iter().all(|p| p.dist(xi0) >= 3.0 * rho) {
        LocalClass::Outside
    } else {
        LocalClass::Mixed
    }
}

pub fn localization_probe(u: &GridFunction, xi0: PlaneVec, rho: f64, delta_list: &[f64]) -> Result<LocalizationReport> {
    if !(rho > 0.0) {
        return Err(invalid(format!("rho must be positive, got {rho}")));
    }
    let min_distance = u.gradients.iter().map(|g| g.dist(xi0)).fold(f64::INFINITY, f64::min);
    let mut deltas = delta_list.to_vec();
    deltas.sort_by(|a, b| b.total_cmp(a));
    if min_distance < rho {
        return Ok(LocalizationReport { xi0, rho, min_distance, rows: Vec::new(), verdict: LocalizationVerdict::NotApplicable });
    }
    let h = u.domain.h;
    let mut rows = Vec::new();
    for &delta in &deltas {
        if delta < h {
            rows.push(LocalizationRow { delta, class: None, points: 0, below_mesh_floor: true });
            continue;
        }
        let img = gradient_image(u, delta.min(1.0))?;
        rows.push(LocalizationRow { delta, class: Some(classify_cloud(&img.points, xi0, rho)), points: img.points.len(), below_mesh_floor: false });
    }
    let last = rows.iter().rev().find_map(|r| r.class);
    let verdict = match last {
        Some(LocalClass::Inside) => LocalizationVerdict::Inside,
        Some(LocalClass::Outside) => LocalizationVerdict::Outside,
        _ => LocalizationVerdict::Inconclusive,
    };
    Ok(LocalizationReport { xi0, rho, min_distance, rows, verdict })
}
