//! Planar vector fields, the field catalog, difference quotients and the modulus of monotony.

mod catalog;
pub mod pathological;
mod spec;

pub use catalog::make_catalog_field;
pub use spec::{FieldSpec, Profile1d, Transform, DEFAULT_KERNEL_ORDER};

use crate::error::{invalid, Result};
use crate::geom::{fd_jacobian, Mat2, PlaneVec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;
use std::fmt;
use std::sync::Arc;

/// Below this norm a difference `D^ζG` is treated as zero.
pub const UNDERFLOW_GUARD: f64 = 1e-14;

/// An evaluatable plane map.
pub trait VectorField: Send + Sync {
    fn eval(&self, xi: PlaneVec) -> PlaneVec;

    /// Jacobian matrix; central differences unless overridden.
    fn jacobian(&self, xi: PlaneVec) -> Mat2 {
        fd_jacobian(|p| self.eval(p), xi)
    }
}

impl<F: Fn(PlaneVec) -> PlaneVec + Send + Sync> VectorField for F {
    fn eval(&self, xi: PlaneVec) -> PlaneVec {
        self(xi)
    }
}

pub type Potential = Arc<dyn Fn(PlaneVec) -> f64 + Send + Sync>;

/// A strictly monotone planar field together with its catalog metadata.
#[derive(Clone)]
pub struct MonotoneField {
    spec: FieldSpec,
    map: Arc<dyn VectorField>,
    is_gradient: bool,
    smoothness_note: String,
    potential: Option<Potential>,
}

impl MonotoneField {
    pub fn new(
        spec: FieldSpec,
        map: Arc<dyn VectorField>,
        is_gradient: bool,
        smoothness_note: impl Into<String>,
    ) -> Self {
        Self { spec, map, is_gradient, smoothness_note: smoothness_note.into(), potential: None }
    }

    /// Attaches a convex potential `F` with `G = ∇F`.
    pub fn with_potential(mut self, potential: Potential) -> Self {
        self.potential = Some(potential);
        self
    }

    pub fn from_spec(spec: &FieldSpec) -> Result<Self> {
        make_catalog_field(spec)
    }

    #[inline]
    pub fn eval(&self, xi: PlaneVec) -> PlaneVec {
        self.map.eval(xi)
    }

    #[inline]
    pub fn jacobian(&self, xi: PlaneVec) -> Mat2 {
        self.map.jacobian(xi)
    }

    pub fn spec(&self) -> &FieldSpec {
        &self.spec
    }

    pub fn label(&self) -> String {
        self.spec.label()
    }

    pub fn is_gradient(&self) -> bool {
        self.is_gradient
    }

    pub fn smoothness_note(&self) -> &str {
        &self.smoothness_note
    }

    /// Value of the potential when the field is a known gradient.
    pub fn potential(&self, xi: PlaneVec) -> Option<f64> {
        self.potential.as_ref().map(|f| f(xi))
    }

    pub fn potential_fn(&self) -> Option<Potential> {
        self.potential.clone()
    }

    pub fn has_potential(&self) -> bool {
        self.potential.is_some()
    }

    pub fn map(&self) -> Arc<dyn VectorField> {
        Arc::clone(&self.map)
    }
}

impl VectorField for MonotoneField {
    fn eval(&self, xi: PlaneVec) -> PlaneVec {
        self.map.eval(xi)
    }

    fn jacobian(&self, xi: PlaneVec) -> Mat2 {
        self.map.jacobian(xi)
    }
}

impl fmt::Debug for MonotoneField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MonotoneField")
            .field("spec", &self.spec.to_string())
            .field("is_gradient", &self.is_gradient)
            .field("smoothness_note", &self.smoothness_note)
            .finish()
    }
}

/// `⟨G(a) − G(b), a − b⟩`.
pub fn monotonicity_gap(field: &dyn VectorField, a: PlaneVec, b: PlaneVec) -> f64 {
    (field.eval(a) - field.eval(b)).dot(a - b)
}

/// Sampled strict-monotonicity check over random pairs in a disc.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonotonicityAudit {
    pub pairs: usize,
    pub radius: f64,
    pub seed: u64,
    pub min_gap: f64,
    /// Smallest `gap / |a − b|²`.
    pub min_normalized_gap: f64,
    /// Pairs with `gap ≤ 0`.
    pub failures: usize,
    pub worst: (PlaneVec, PlaneVec),
    pub pass: bool,
}

/// Checks `⟨G(a) − G(b), a − b⟩ > 0` on seeded pairs of distinct points in `B_radius`.
pub fn monotonicity_audit(field: &dyn VectorField, pairs: usize, radius: f64, seed: u64) -> Result<MonotonicityAudit> {
    if pairs == 0 || !(radius > 0.0 && radius.is_finite()) {
        return Err(invalid("monotonicity audit needs pairs > 0 and a positive radius"));
    }
    const CHUNK: usize = 4096;
    let samples: Vec<(f64, f64, PlaneVec, PlaneVec)> = (0..pairs.div_ceil(CHUNK))
        .into_par_iter()
        .flat_map_iter(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (c as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
            let count = CHUNK.min(pairs - c * CHUNK);
            (0..count)
                .map(|_| {
                    let a = random_in_disc(&mut rng, radius);
                    let mut b = random_in_disc(&mut rng, radius);
                    if a == b {
                        b = -a + PlaneVec::new(1e-3, 0.0);
                    }
                    let gap = monotonicity_gap(field, a, b);
                    (gap, gap / (a - b).norm_sq(), a, b)
                })
                .collect::<Vec<_>>()
        })
        .collect();
    let mut audit = MonotonicityAudit {
        pairs,
        radius,
        seed,
        min_gap: f64::INFINITY,
        min_normalized_gap: f64::INFINITY,
        failures: 0,
        worst: (PlaneVec::ZERO, PlaneVec::ZERO),
        pass: true,
    };
    for (gap, norm, a, b) in samples {
        if !(gap > 0.0) {
            audit.failures += 1;
        }
        if gap < audit.min_gap || gap.is_nan() {
            audit.min_gap = gap;
            audit.worst = (a, b);
        }
        audit.min_normalized_gap = audit.min_normalized_gap.min(norm);
    }
    audit.pass = audit.failures == 0;
    Ok(audit)
}

/// Both ellipticity quotients of a finite difference.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuotientSample {
    pub base: PlaneVec,
    pub offset: PlaneVec,
    /// `⟨D^ζG(ξ), ζ⟩ / |ζ|²`.
    pub q_lower: f64,
    /// `⟨D^ζG(ξ), ζ⟩ / |D^ζG(ξ)|²`, `+∞` when the difference underflows.
    pub q_upper_inv: f64,
}

impl QuotientSample {
    /// `1 / q_upper_inv`, i.e. `|D^ζG|² / ⟨D^ζG, ζ⟩`; zero for the sentinel.
    pub fn upper(&self) -> f64 {
        if self.q_upper_inv.is_infinite() {
            0.0
        } else if self.q_upper_inv <= 0.0 {
            f64::INFINITY
        } else {
            1.0 / self.q_upper_inv
        }
    }
}

/// Quotients of `D^ζG(ξ) = G(ξ + ζ) − G(ξ)` without validation.
#[inline]
pub fn quotients(field: &dyn VectorField, base: PlaneVec, offset: PlaneVec) -> (f64, f64) {
    quotients_from_difference(field.eval(base + offset) - field.eval(base), offset)
}

#[inline]
pub(crate) fn quotients_from_difference(diff: PlaneVec, offset: PlaneVec) -> (f64, f64) {
    let inner = diff.dot(offset);
    let q_lower = inner / offset.norm_sq();
    let dn = diff.norm();
    let q_upper_inv = if dn < UNDERFLOW_GUARD { f64::INFINITY } else { inner / (dn * dn) };
    (q_lower, q_upper_inv)
}

pub fn quotient_sample(field: &dyn VectorField, base: PlaneVec, offset: PlaneVec) -> Result<QuotientSample> {
    if offset.norm() == 0.0 || !offset.is_finite() || !base.is_finite() {
        return Err(invalid("quotient offset must be finite and nonzero"));
    }
    let (q_lower, q_upper_inv) = quotients(field, base, offset);
    Ok(QuotientSample { base, offset, q_lower, q_upper_inv })
}

/// `|⟨D^ζG(ξ), ζ'⟩ − ⟨D^{ζ'}G(ξ), ζ⟩|`, which vanishes to first order for gradients.
pub fn cross_difference_asymmetry(field: &dyn VectorField, base: PlaneVec, z1: PlaneVec, z2: PlaneVec) -> f64 {
    let g0 = field.eval(base);
    let d1 = field.eval(base + z1) - g0;
    let d2 = field.eval(base + z2) - g0;
    (d1.dot(z2) - d2.dot(z1)).abs()
}

/// Sampled, box-restricted estimate of the modulus of monotony at one separation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonotonyEstimate {
    pub t: f64,
    pub box_radius: f64,
    /// Always true: the infimum is taken over pairs inside the box only.
    pub restricted: bool,
    /// Minimum gap found over sampled pairs with separation at least `t`.
    pub value: f64,
    pub argmin: (PlaneVec, PlaneVec),
    pub samples: usize,
}

/// Pair sample in the box: midpoint, half-separation vector.
#[derive(Clone, Copy)]
struct PairSample {
    sep: f64,
    gap: f64,
    a: PlaneVec,
    b: PlaneVec,
}

fn pair(center: PlaneVec, sep: f64, angle: f64) -> (PlaneVec, PlaneVec) {
    let half = PlaneVec::polar(0.5 * sep, angle);
    (center + half, center - half)
}

fn random_in_disc(rng: &mut ChaCha8Rng, radius: f64) -> PlaneVec {
    let r = radius * rng.random::<f64>().sqrt();
    PlaneVec::polar(r, TAU * rng.random::<f64>())
}

/// Estimates `ω_G(t) = inf{⟨G(ξ) − G(ζ), ξ − ζ⟩ : |ξ − ζ| ≥ t}` over pairs in `B_R`.
pub fn modulus_of_monotony(
    field: &dyn VectorField,
    t: f64,
    box_radius: f64,
    samples: usize,
    seed: u64,
) -> Result<MonotonyEstimate> {
    Ok(monotony_profile(field, &[t], box_radius, samples, seed)?.remove(0))
}

/// Estimates of the modulus on a grid of separations from one shared pair pool.
///
/// Every pair counts for every `t` not exceeding its separation, so the result is
/// nondecreasing along the grid by construction.
pub fn monotony_profile(
    field: &dyn VectorField,
    ts: &[f64],
    box_radius: f64,
    samples: usize,
    seed: u64,
) -> Result<Vec<MonotonyEstimate>> {
    if samples == 0 {
        return Err(invalid("modulus of monotony needs at least one sample"));
    }
    if ts.is_empty() {
        return Err(invalid("modulus of monotony needs at least one separation"));
    }
    for &t in ts {
        if !(t > 0.0 && t.is_finite()) || !(box_radius > t / 2.0) || !box_radius.is_finite() {
            return Err(invalid(format!("need t > 0 and box_radius > t/2, got t = {t}, R = {box_radius}")));
        }
    }
    let per_level = samples.div_ceil(ts.len()).max(1);
    let chunk = 2048usize;
    let mut pool: Vec<PairSample> = Vec::with_capacity(per_level * ts.len());
    for (level, &t) in ts.iter().enumerate() {
        let chunks = per_level.div_ceil(chunk);
        let level_pool: Vec<PairSample> = (0..chunks)
            .into_par_iter()
            .flat_map_iter(|c| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed ^ ((level as u64) << 32) ^ (c as u64).wrapping_mul(0x9E37_79B9));
                let count = chunk.min(per_level - c * chunk);
                (0..count)
                    .map(|i| {
                        // Half the pairs sit exactly at separation t, where the infimum lives
                        // for fields that grow away from the diagonal.
                        let sep = if i % 2 == 0 {
                            t
                        } else {
                            t + (2.0 * box_radius - t) * rng.random::<f64>()
                        };
                        let center = random_in_disc(&mut rng, (box_radius - 0.5 * sep).max(0.0));
                        let (a, b) = pair(center, sep, TAU * rng.random::<f64>());
                        PairSample { sep, gap: monotonicity_gap(field, a, b), a, b }
                    })
                    .collect::<Vec<_>>()
            })
            .collect();
        let refined = refine_minimizers(field, &level_pool, t, box_radius, seed ^ 0xA5A5 ^ level as u64);
        pool.extend(level_pool);
        pool.extend(refined);
    }
    Ok(ts
        .iter()
        .map(|&t| {
            let best = pool
                .iter()
                .filter(|s| s.sep >= t)
                .min_by(|x, y| x.gap.total_cmp(&y.gap))
                .copied()
                .expect("each level contributes pairs at its own separation");
            MonotonyEstimate {
                t,
                box_radius,
                restricted: true,
                value: best.gap,
                argmin: (best.a, best.b),
                samples: pool.len(),
            }
        })
        .collect())
}

/// Random pattern search around the best pairs at separation `t`.
fn refine_minimizers(
    field: &dyn VectorField,
    pool: &[PairSample],
    t: f64,
    box_radius: f64,
    seed: u64,
) -> Vec<PairSample> {
    let mut boundary: Vec<&PairSample> = pool.iter().filter(|s| s.sep == t).collect();
    boundary.sort_by(|x, y| x.gap.total_cmp(&y.gap));
    let starts: Vec<PairSample> = boundary.into_iter().take(8).copied().collect();
    starts
        .par_iter()
        .enumerate()
        .map(|(k, s)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(k as u64));
            let mut center = (s.a + s.b) * 0.5;
            let mut angle = (s.a - s.b).arg();
            let mut best = *s;
            let mut step = 0.1 * box_radius;
            let limit = box_radius - 0.5 * t;
            for _ in 0..200 {
                let c = center + random_in_disc(&mut rng, step);
                if c.norm() > limit {
                    step *= 0.9;
                    continue;
                }
                let ang = angle + step / box_radius * (rng.random::<f64>() - 0.5) * TAU;
                let (a, b) = pair(c, t, ang);
                let gap = monotonicity_gap(field, a, b);
                if gap < best.gap {
                    best = PairSample { sep: t, gap, a, b };
                    center = c;
                    angle = ang;
                } else {
                    step *= 0.95;
                }
            }
            best
        })
        .collect()
}

/// Minimum of `ω̂(t) / t` over a grid in `[t_lo, t_hi]`, the floor used by radius certificates.
pub fn monotony_floor(
    field: &dyn VectorField,
    t_lo: f64,
    t_hi: f64,
    grid: usize,
    box_radius: f64,
    samples: usize,
    seed: u64,
) -> Result<f64> {
    if !(t_lo > 0.0 && t_hi >= t_lo) || grid == 0 {
        return Err(invalid("monotony floor needs 0 < t_lo <= t_hi and a nonempty grid"));
    }
    let ts: Vec<f64> = if grid == 1 {
        vec![t_lo]
    } else {
        (0..grid).map(|k| t_lo + (t_hi - t_lo) * k as f64 / (grid - 1) as f64).collect()
    };
    let est = monotony_profile(field, &ts, box_radius, samples, seed)?;
    // On each grid cell [t_k, t_{k+1}], ω(t) ≥ ω(t_k) and t ≤ t_{k+1}.
    let mut floor = f64::INFINITY;
    for (k, e) in est.iter().enumerate() {
        let right = ts.get(k + 1).copied().unwrap_or(ts[k]);
        floor = floor.min(e.value / right);
    }
    Ok(floor)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gap_examples() {
        let id = make_catalog_field(&FieldSpec::Identity).unwrap();
        let z = PlaneVec::new(0.3, -0.4);
        assert!((monotonicity_gap(&id, z, PlaneVec::ZERO) - 0.25).abs() < 1e-16);
        let g0 = make_catalog_field(&FieldSpec::G0Cubic).unwrap();
        assert_eq!(monotonicity_gap(&g0, PlaneVec::new(1.0, 0.0), PlaneVec::ZERO), 1.0);
        let p4 = make_catalog_field(&FieldSpec::PLaplacian { p: 4.0 }).unwrap();
        for s in [0.1, 0.7, 2.0] {
            let got = monotonicity_gap(&p4, PlaneVec::new(s, 0.0), PlaneVec::new(-s, 0.0));
            // Closed form: |ξ|²ξ at ±s gives ±s³; the gap is 2s³ · 2s.
            let oracle = 2.0 * s.powi(3) * 2.0 * s;
            assert!((got - oracle).abs() <= 1e-14 * oracle.max(1.0));
            assert!((got - 4.0 * s.powi(4)).abs() <= 1e-14 * got.max(1.0));
        }
    }

    #[test]
    fn quotient_examples() {
        let id = make_catalog_field(&FieldSpec::Identity).unwrap();
        let q = quotient_sample(&id, PlaneVec::new(2.0, 1.0), PlaneVec::new(0.25, -0.5)).unwrap();
        assert!((q.q_lower - 1.0).abs() < 1e-15 && (q.q_upper_inv - 1.0).abs() < 1e-15);
        assert!(quotient_sample(&id, PlaneVec::ZERO, PlaneVec::ZERO).is_err());

        let p4 = make_catalog_field(&FieldSpec::PLaplacian { p: 4.0 }).unwrap();
        let p15 = make_catalog_field(&FieldSpec::PLaplacian { p: 1.5 }).unwrap();
        let mut prev = (f64::INFINITY, f64::INFINITY);
        for s in [1e-1, 1e-2, 1e-3] {
            let ql = quotient_sample(&p4, PlaneVec::ZERO, PlaneVec::new(s, 0.0)).unwrap().q_lower;
            let qu = quotient_sample(&p15, PlaneVec::ZERO, PlaneVec::new(0.0, s)).unwrap().q_upper_inv;
            assert!((ql - s * s).abs() < 1e-15, "q_lower at origin is |ζ|^(p-2)");
            assert!((qu - s.sqrt()).abs() < 1e-12, "q_upper_inv at origin is |ζ|^(2-p)");
            assert!(ql < prev.0 && qu < prev.1);
            prev = (ql, qu);
        }
    }

    #[test]
    fn underflow_sentinel() {
        let zero_field = |_: PlaneVec| PlaneVec::ZERO;
        let q = quotient_sample(&zero_field, PlaneVec::ZERO, PlaneVec::new(1.0, 0.0)).unwrap();
        assert_eq!(q.q_upper_inv, f64::INFINITY);
        assert_eq!(q.upper(), 0.0);
    }

    #[test]
    fn modulus_of_identity_and_p4() {
        let id = make_catalog_field(&FieldSpec::Identity).unwrap();
        let est = modulus_of_monotony(&id, 0.5, 1.0, 4000, 7).unwrap();
        assert!((est.value - 0.25).abs() < 1e-12);
        assert!(est.restricted);

        let p4 = make_catalog_field(&FieldSpec::PLaplacian { p: 4.0 }).unwrap();
        let t: f64 = 0.5;
        let est = modulus_of_monotony(&p4, t, 1.0, 100_000, 11).unwrap();
        let oracle = t.powi(4) / 4.0;
        assert!(est.value >= oracle * (1.0 - 1e-12), "sampled value is an upper bound");
        assert!(est.value <= oracle * 1.05, "{} vs {}", est.value, oracle);
    }

    #[test]
    fn modulus_is_deterministic_and_rejects_bad_input() {
        let g0 = make_catalog_field(&FieldSpec::G0Cubic).unwrap();
        let a = modulus_of_monotony(&g0, 0.3, 2.0, 5000, 3).unwrap();
        let b = modulus_of_monotony(&g0, 0.3, 2.0, 5000, 3).unwrap();
        assert_eq!(a, b);
        assert!(modulus_of_monotony(&g0, 0.3, 2.0, 0, 3).is_err());
        assert!(modulus_of_monotony(&g0, 1.0, 0.4, 10, 3).is_err());
    }

    #[test]
    fn profile_is_nondecreasing_in_t() {
        let g0 = make_catalog_field(&FieldSpec::G0Cubic).unwrap();
        let ts = [0.1, 0.2, 0.4, 0.8];
        let est = monotony_profile(&g0, &ts, 2.0, 20_000, 5).unwrap();
        assert!(est.windows(2).all(|w| w[0].value <= w[1].value));
    }
}
