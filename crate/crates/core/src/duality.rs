//! Inversion of monotone maps and the transforms built on it: the dual field,
//! the modification at infinity and mollification.

use crate::error::{invalid, Error, Result};
use crate::field::{FieldSpec, MonotoneField, Transform, VectorField};
use crate::geom::{Mat2, PlaneVec};
use crate::quadrature::gauss_legendre;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;
use std::sync::Arc;

/// Result of solving `G(ξ) = η`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InversionResult {
    pub preimage: PlaneVec,
    pub residual: f64,
    pub iterations: usize,
}

/// Controls for [`invert_field`].
#[derive(Clone, Copy, Debug)]
pub struct InvertOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Half-width of the square scanned by the fallback.
    pub box_radius: f64,
    /// Points per axis of the fallback scan.
    pub scan_points: usize,
    pub hint: Option<PlaneVec>,
}

impl Default for InvertOptions {
    fn default() -> Self {
        Self { tol: 1e-12, max_iter: 100, box_radius: 10.0, scan_points: 41, hint: None }
    }
}

impl InvertOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self { tol, ..Self::default() }
    }

    pub fn hint(mut self, hint: PlaneVec) -> Self {
        self.hint = Some(hint);
        self
    }
}

/// Solves `G(ξ) = target` for a strictly monotone `G`.
///
/// Damped Newton from the hint (or the target itself); if that stalls, a grid scan
/// over the working box seeds a second Newton run and finally an Armijo descent on
/// `|G(ξ) − η|²`.
pub fn invert_field(field: &dyn VectorField, target: PlaneVec, opts: &InvertOptions) -> Result<InversionResult> {
    if !(opts.tol > 0.0) {
        return Err(invalid("inversion tolerance must be positive"));
    }
    if !target.is_finite() {
        return Err(invalid("inversion target must be finite"));
    }
    let mut best = Best::new(field, target, opts.hint.unwrap_or(target));
    if opts.hint.is_some() {
        best.offer(field, target, target);
    }
    let mut iterations = 0;
    let start = best.point;
    if let Some(found) = newton(field, target, start, opts, &mut best, &mut iterations) {
        return Ok(found);
    }
    // Fallback: coarse scan, then Newton again, then derivative-free-safe descent.
    let n = opts.scan_points.max(3);
    let r = opts.box_radius;
    for i in 0..n {
        for j in 0..n {
            let p = PlaneVec::new(-r + 2.0 * r * i as f64 / (n - 1) as f64, -r + 2.0 * r * j as f64 / (n - 1) as f64);
            best.offer(field, target, p);
        }
    }
    let seed = best.point;
    if let Some(found) = newton(field, target, seed, opts, &mut best, &mut iterations) {
        return Ok(found);
    }
    if let Some(found) = descent(field, target, best.point, opts, &mut best, &mut iterations) {
        return Ok(found);
    }
    Err(Error::NonConvergence { best_residual: best.residual, best_point: best.point, iterations })
}

struct Best {
    point: PlaneVec,
    residual: f64,
}

impl Best {
    fn new(field: &dyn VectorField, target: PlaneVec, p: PlaneVec) -> Self {
        let residual = (field.eval(p) - target).norm();
        Self { point: p, residual: if residual.is_finite() { residual } else { f64::INFINITY } }
    }

    fn offer(&mut self, field: &dyn VectorField, target: PlaneVec, p: PlaneVec) -> f64 {
        let res = (field.eval(p) - target).norm();
        if res < self.residual {
            self.residual = res;
            self.point = p;
        }
        res
    }
}

fn newton(
    field: &dyn VectorField,
    target: PlaneVec,
    start: PlaneVec,
    opts: &InvertOptions,
    best: &mut Best,
    iterations: &mut usize,
) -> Option<InversionResult> {
    let mut x = start;
    let mut r = field.eval(x) - target;
    let mut rn = r.norm();
    for _ in 0..opts.max_iter {
        if rn <= opts.tol {
            polish(field, target, &mut x, &mut rn);
            return Some(InversionResult { preimage: x, residual: rn, iterations: *iterations });
        }
        *iterations += 1;
        let j = field.jacobian(x);
        let step = match j.solve(-r) {
            Some(s) if s.is_finite() => s,
            // Singular Jacobian: gradient direction of the squared residual.
            _ => -(j.transpose().apply(r)),
        };
        if !step.is_finite() || step.norm() == 0.0 {
            return None;
        }
        let mut alpha = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let trial = x + step * alpha;
            let tr = field.eval(trial) - target;
            let tn = tr.norm();
            if tn.is_finite() && tn < (1.0 - 1e-4 * alpha) * rn {
                x = trial;
                r = tr;
                rn = tn;
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if rn < best.residual {
            best.residual = rn;
            best.point = x;
        }
        if !accepted {
            return None;
        }
    }
    (rn <= opts.tol).then_some(InversionResult { preimage: x, residual: rn, iterations: *iterations })
}

/// One extra Newton step past the tolerance, kept only if it helps.
fn polish(field: &dyn VectorField, target: PlaneVec, x: &mut PlaneVec, rn: &mut f64) {
    if *rn == 0.0 {
        return;
    }
    let r = field.eval(*x) - target;
    if let Some(step) = field.jacobian(*x).solve(-r) {
        let trial = *x + step;
        let tn = (field.eval(trial) - target).norm();
        if tn < *rn {
            *x = trial;
            *rn = tn;
        }
    }
}

/// Armijo descent on `m(ξ) = |G(ξ) − η|²` using the steepest descent direction and,
/// when available, the Newton direction.
fn descent(
    field: &dyn VectorField,
    target: PlaneVec,
    start: PlaneVec,
    opts: &InvertOptions,
    best: &mut Best,
    iterations: &mut usize,
) -> Option<InversionResult> {
    let mut x = start;
    let mut r = field.eval(x) - target;
    let mut m = r.norm_sq();
    for _ in 0..opts.max_iter * 20 {
        if m.sqrt() <= opts.tol {
            return Some(InversionResult { preimage: x, residual: m.sqrt(), iterations: *iterations });
        }
        *iterations += 1;
        let j = field.jacobian(x);
        let grad = j.transpose().apply(r) * 2.0;
        let mut dirs = vec![-grad];
        if let Some(s) = j.solve(-r) {
            if s.is_finite() {
                dirs.insert(0, s);
            }
        }
        // Monotonicity: −(G(ξ) − η) is a descent direction for the distance to the root.
        dirs.push(-r);
        let mut moved = false;
        'dirs: for d in dirs {
            let slope = grad.dot(d);
            if !(slope < 0.0) {
                continue;
            }
            let mut alpha = 1.0;
            for _ in 0..60 {
                let trial = x + d * alpha;
                let tr = field.eval(trial) - target;
                let tm = tr.norm_sq();
                if tm.is_finite() && tm <= m + 1e-4 * alpha * slope {
                    x = trial;
                    r = tr;
                    m = tm;
                    moved = true;
                    break 'dirs;
                }
                alpha *= 0.5;
            }
        }
        if m.sqrt() < best.residual {
            best.residual = m.sqrt();
            best.point = x;
        }
        if !moved {
            break;
        }
    }
    (m.sqrt() <= opts.tol).then_some(InversionResult { preimage: x, residual: m.sqrt(), iterations: *iterations })
}

/// `ξ ↦ i G^{-1}(−iξ)`.
struct DualMap {
    base: MonotoneField,
    tol: f64,
}

impl DualMap {
    fn preimage(&self, xi: PlaneVec) -> PlaneVec {
        let target = xi.rot_neg();
        let opts = InvertOptions { tol: self.tol * (1.0 + target.norm()), ..InvertOptions::default() }.hint(target);
        match invert_field(&self.base, target, &opts) {
            Ok(res) => res.preimage,
            Err(Error::NonConvergence { best_point, .. }) => best_point,
            Err(_) => target,
        }
    }
}

impl VectorField for DualMap {
    fn eval(&self, xi: PlaneVec) -> PlaneVec {
        self.preimage(xi).rot()
    }

    fn jacobian(&self, xi: PlaneVec) -> Mat2 {
        let x = self.preimage(xi);
        match self.base.jacobian(x).inverse() {
            Some(inv) => Mat2::ROT * inv * (Mat2::ROT * -1.0),
            None => crate::geom::fd_jacobian(|p| self.eval(p), xi),
        }
    }
}

/// Relative inversion tolerance used inside derived fields.
pub const INNER_TOL: f64 = 1e-13;

/// The dual field `G*(ξ) = i G^{-1}(−iξ)`.
pub fn dual_field(field: &MonotoneField) -> Result<MonotoneField> {
    let spec = field.spec().clone().then(Transform::Dual);
    let map = DualMap { base: field.clone(), tol: INNER_TOL };
    let probe = PlaneVec::new(0.3, -0.2);
    let opts = InvertOptions::with_tol(1e-10).hint(probe.rot_neg());
    invert_field(field, probe.rot_neg(), &opts)?;
    let note = format!("dual of {}: evaluated by monotone inversion", field.label());
    Ok(MonotoneField::new(spec, Arc::new(map), field.is_gradient(), note))
}

/// Parameters of the modification at infinity.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CutoffSpec {
    #[serde(rename = "M")]
    pub m: f64,
    /// Stiffness `2 sup_{B_4M} |G| / M`.
    pub c: f64,
    /// Growth constant `2c + 2cM + sup_{B_4M} |G|`.
    pub l: f64,
    /// Sampled `sup_{B_4M} |G|`.
    pub sup_g: f64,
}

/// Quintic smoothstep `6t⁵ − 15t⁴ + 10t³`; its slope never exceeds 15/8.
pub fn smoothstep(t: f64) -> f64 {
    let t = t.clamp(0.0, 1.0);
    t * t * t * (t * (6.0 * t - 15.0) + 10.0)
}

pub fn smoothstep_slope(t: f64) -> f64 {
    if !(0.0..=1.0).contains(&t) {
        return 0.0;
    }
    30.0 * t * t * (t - 1.0) * (t - 1.0)
}

/// Cutoff equal to 1 on `B_{2M}` and 0 outside `B_{4M}`: `1 − S((|x| − 2M) / 2M)`, so
/// `|∇η| ≤ 15 / (16 M)`.
pub fn cutoff(r: f64, m: f64) -> f64 {
    1.0 - smoothstep((r - 2.0 * m) / (2.0 * m))
}

pub fn cutoff_slope(r: f64, m: f64) -> f64 {
    -smoothstep_slope((r - 2.0 * m) / (2.0 * m)) / (2.0 * m)
}

struct Modified {
    base: MonotoneField,
    m: f64,
    c: f64,
}

impl VectorField for Modified {
    fn eval(&self, xi: PlaneVec) -> PlaneVec {
        let r = xi.norm();
        let eta = cutoff(r, self.m);
        let mut out = if eta > 0.0 { self.base.eval(xi) * eta } else { PlaneVec::ZERO };
        if r > self.m {
            out += xi * (2.0 * self.c * (r - self.m) / r);
        }
        out
    }

    fn jacobian(&self, xi: PlaneVec) -> Mat2 {
        let r = xi.norm();
        let eta = cutoff(r, self.m);
        let mut j = Mat2::default();
        if eta > 0.0 {
            j = self.base.jacobian(xi) * eta;
            if r > 0.0 {
                let slope = cutoff_slope(r, self.m);
                if slope != 0.0 {
                    j = j + Mat2::outer(self.base.eval(xi), xi * (slope / r));
                }
            }
        }
        if r > self.m {
            let e = xi * (1.0 / r);
            let radial = Mat2::outer(e, e);
            let s = 2.0 * self.c;
            j = j + (Mat2::IDENTITY * (1.0 - self.m / r) + radial * (self.m / r)) * s;
        }
        j
    }
}

/// Sampled `sup_{B_ρ} |G|` on a polar grid including the origin.
pub fn sampled_sup_norm(field: &dyn VectorField, rho: f64) -> f64 {
    let mut sup = field.eval(PlaneVec::ZERO).norm();
    let (nr, nt) = (64, 128);
    for i in 1..=nr {
        let r = rho * i as f64 / nr as f64;
        for k in 0..nt {
            sup = sup.max(field.eval(PlaneVec::polar(r, TAU * k as f64 / nt as f64)).norm());
        }
    }
    sup
}

/// `G̃ = ηG + ∇F` with `F(x) = c (|x| − M)₊²`; equals `G` on `B̄_M`.
pub fn modify_at_infinity(field: &MonotoneField, m: f64) -> Result<(MonotoneField, CutoffSpec)> {
    if !(m > 0.0 && m.is_finite()) {
        return Err(invalid(format!("modification radius must be positive, got {m}")));
    }
    let sup_g = sampled_sup_norm(field, 4.0 * m);
    let c = 2.0 * sup_g / m;
    let l = 2.0 * c + 2.0 * c * m + sup_g;
    let spec = field.spec().clone().then(Transform::Modify { radius: m });
    let note = format!("{} inside B_{m}; quadratic growth stiffness c = {c} outside B_{}", field.label(), 4.0 * m);
    let out = MonotoneField::new(spec, Arc::new(Modified { base: field.clone(), m, c }), false, note);
    Ok((out, CutoffSpec { m, c, l, sup_g }))
}

/// Mollifier parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MollifierSpec {
    pub epsilon: f64,
    pub kernel_order: usize,
}

impl MollifierSpec {
    pub fn new(epsilon: f64, kernel_order: usize) -> Result<Self> {
        Transform::Mollify { eps: epsilon, order: kernel_order }.validate()?;
        Ok(Self { epsilon, kernel_order })
    }
}

/// Unnormalized bump `exp(−1 / (1 − r²))` on the unit disc.
pub fn bump(r: f64) -> f64 {
    if r >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - r * r)).exp()
    }
}

/// Polar tensor rule for the normalized bump: `n` Gauss-Legendre radii times `n`
/// equally spaced angles. Returns `(node, weight)` with weights summing to 1.
pub fn kernel_nodes(n: usize) -> Vec<(PlaneVec, f64)> {
    let (x, w) = gauss_legendre(n);
    let mut nodes = Vec::with_capacity(n * n);
    for (xi, wi) in x.iter().zip(&w) {
        let r = 0.5 * (xi + 1.0);
        let radial = 0.5 * wi * r * bump(r) * TAU / n as f64;
        for k in 0..n {
            let theta = TAU * (k as f64 + 0.5) / n as f64;
            nodes.push((PlaneVec::polar(r, theta), radial));
        }
    }
    let total: f64 = nodes.iter().map(|(_, w)| w).sum();
    for node in &mut nodes {
        node.1 /= total;
    }
    nodes
}

/// Raw mass `∫_{B_1} exp(−1/(1−|x|²)) dx` under the polar rule of order `n`.
pub fn kernel_mass(n: usize) -> f64 {
    let (x, w) = gauss_legendre(n);
    x.iter().zip(&w).map(|(xi, wi)| {
        let r = 0.5 * (xi + 1.0);
        0.5 * wi * r * bump(r) * TAU
    }).sum()
}

struct Mollified {
    base: MonotoneField,
    eps: f64,
    nodes: Vec<(PlaneVec, f64)>,
}

impl VectorField for Mollified {
    fn eval(&self, xi: PlaneVec) -> PlaneVec {
        let mut acc = PlaneVec::ZERO;
        for &(y, w) in &self.nodes {
            acc += self.base.eval(xi - y * self.eps) * w;
        }
        acc + xi * self.eps
    }

    /// Exact derivative of the discrete average.
    fn jacobian(&self, xi: PlaneVec) -> Mat2 {
        let mut acc = Mat2::scalar(self.eps);
        for &(y, w) in &self.nodes {
            acc = acc + self.base.jacobian(xi - y * self.eps) * w;
        }
        acc
    }
}

/// `G_ε = G ∗ ρ_ε + ε ξ`.
pub fn mollify(field: &MonotoneField, spec: &MollifierSpec) -> Result<MonotoneField> {
    MollifierSpec::new(spec.epsilon, spec.kernel_order)?;
    let fspec: FieldSpec = field.spec().clone().then(Transform::Mollify { eps: spec.epsilon, order: spec.kernel_order });
    let map = Mollified { base: field.clone(), eps: spec.epsilon, nodes: kernel_nodes(spec.kernel_order) };
    let note = format!("smooth, strongly monotone with lower quotient at least {}", spec.epsilon);
    let mut out = MonotoneField::new(fspec, Arc::new(map), field.is_gradient(), note);
    if field.has_potential() {
        let base = field.clone();
        let eps = spec.epsilon;
        let nodes = kernel_nodes(spec.kernel_order);
        out = out.with_potential(Arc::new(move |xi: PlaneVec| {
            let mut acc = 0.0;
            for &(y, w) in &nodes {
                acc += base.potential(xi - y * eps).unwrap_or(0.0) * w;
            }
            acc + 0.5 * eps * xi.norm_sq()
        }));
    }
    Ok(out)
}
