//! Correspondence between monotone fields and strictly 1-Lipschitz Beltrami data,
//! Γ± difference-quotient scans, the linear dichotomy and the explicit counterexample.

pub mod counterexample;
pub mod linear;

use crate::duality::{invert_field, InvertOptions};
use crate::error::{invalid, Error, Result};
use crate::field::{FieldSpec, MonotoneField, VectorField};
use crate::geom::{fd_jacobian, Mat2, PlaneVec};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;
use std::fmt;
use std::sync::Arc;

pub use counterexample::{build_counterexample, counterexample_stilde_audit, CounterexampleBundle, StildeAudit};
pub use linear::{linear_analyze, AffineMap, ConstantPart, LinearBeltramiVerdict};

/// Complex numbers, identified with plane vectors by `x + iy <-> (x, y)`.
pub type ComplexVal = Complex64;

/// Tolerance used when inverting `φ`, `F` and `F*`.
pub const CORRESPONDENCE_TOL: f64 = 1e-10;

/// Where a [`LipschitzMap`] came from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Provenance {
    Catalog(String),
    MintyForward(FieldSpec),
    ExplicitS6,
}

/// A strictly 1-Lipschitz complex map `H`.
#[derive(Clone)]
pub struct LipschitzMap {
    map: Arc<dyn VectorField>,
    provenance: Provenance,
}

impl LipschitzMap {
    pub fn new(map: Arc<dyn VectorField>, provenance: Provenance) -> Self {
        Self { map, provenance }
    }

    /// `H ≡ 0`.
    pub fn zero() -> Self {
        Self::new(Arc::new(|_: PlaneVec| PlaneVec::ZERO), Provenance::Catalog("zero".into()))
    }

    /// `H(z) = a z + b z̄ + c`, strictly 1-Lipschitz iff `|a| + |b| < 1`.
    pub fn affine(a: ComplexVal, b: ComplexVal, c: ComplexVal) -> Result<Self> {
        if !(a.norm() + b.norm() < 1.0) {
            return Err(invalid(format!("affine map needs |a| + |b| < 1, got {}", a.norm() + b.norm())));
        }
        let label = format!("affine(a={a}, b={b}, c={c})");
        let map = move |p: PlaneVec| {
            let z = p.to_complex();
            PlaneVec::from(a * z + b * z.conj() + c)
        };
        Ok(Self::new(Arc::new(map), Provenance::Catalog(label)))
    }

    #[inline]
    pub fn eval(&self, z: PlaneVec) -> PlaneVec {
        self.map.eval(z)
    }

    pub fn eval_complex(&self, z: ComplexVal) -> ComplexVal {
        self.map.eval(z.into()).to_complex()
    }

    /// Real Jacobian of `z ↦ H(z)`.
    pub fn jacobian(&self, z: PlaneVec) -> Mat2 {
        self.map.jacobian(z)
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn label(&self) -> String {
        match &self.provenance {
            Provenance::Catalog(s) => s.clone(),
            Provenance::MintyForward(spec) => format!("minty({spec})"),
            Provenance::ExplicitS6 => "explicit_s6".into(),
        }
    }

    /// `L_H(ξ, ζ) = (H(ξ + ζ) − H(ξ)) / ζ̄`.
    pub fn difference_quotient(&self, xi: PlaneVec, zeta: PlaneVec) -> ComplexVal {
        let d = (self.eval(xi + zeta) - self.eval(xi)).to_complex();
        d / zeta.to_complex().conj()
    }

    pub fn map(&self) -> Arc<dyn VectorField> {
        Arc::clone(&self.map)
    }
}

impl VectorField for LipschitzMap {
    fn eval(&self, z: PlaneVec) -> PlaneVec {
        self.map.eval(z)
    }
    fn jacobian(&self, z: PlaneVec) -> Mat2 {
        self.map.jacobian(z)
    }
}

impl fmt::Debug for LipschitzMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LipschitzMap").field("provenance", &self.provenance).finish()
    }
}

/// Largest sampled Lipschitz ratio.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LipschitzAudit {
    pub max_ratio: f64,
    pub pairs: usize,
    pub worst: (PlaneVec, PlaneVec),
}

/// Samples pairs in `B_radius` and fails on the first ratio `≥ 1`.
pub fn audit_lipschitz(h: &dyn VectorField, radius: f64, pairs: usize, seed: u64) -> Result<LipschitzAudit> {
    let results: Vec<(f64, PlaneVec, PlaneVec)> = (0..pairs.div_ceil(1024))
        .into_par_iter()
        .flat_map_iter(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(c as u64 * 7919));
            let count = 1024.min(pairs - c * 1024);
            (0..count)
                .map(|i| {
                    let a = PlaneVec::polar(radius * rng.random::<f64>().sqrt(), TAU * rng.random::<f64>());
                    // Mix long and short pairs.
                    let len = if i % 2 == 0 { radius * rng.random::<f64>() } else { 1e-3 * radius * rng.random::<f64>() };
                    let b = a + PlaneVec::polar(len.max(1e-12), TAU * rng.random::<f64>());
                    let ratio = (h.eval(a) - h.eval(b)).norm() / (a - b).norm();
                    (ratio, a, b)
                })
                .collect::<Vec<_>>()
        })
        .collect();
    let worst = results.iter().copied().max_by(|x, y| x.0.total_cmp(&y.0)).unwrap_or((0.0, PlaneVec::ZERO, PlaneVec::ZERO));
    if worst.0 >= 1.0 || worst.0.is_nan() {
        return Err(Error::LipschitzViolation { a: worst.1, b: worst.2, ratio: worst.0 });
    }
    Ok(LipschitzAudit { max_ratio: worst.0, pairs, worst: (worst.1, worst.2) })
}

/// `H` on the image of `φ(ξ) = conj(ξ + G(ξ))`, by `H(φ(ξ)) = ξ − G(ξ)`.
struct MintyH {
    field: MonotoneField,
}

impl MintyH {
    /// `ξ` with `ξ + G(ξ) = z̄`.
    fn preimage(&self, z: PlaneVec) -> PlaneVec {
        let target = z.conj();
        let opts = InvertOptions::with_tol(CORRESPONDENCE_TOL).hint(target * 0.5);
        match invert_field(&PlusIdentity(&self.field), target, &opts) {
            Ok(r) => r.preimage,
            Err(Error::NonConvergence { best_point, .. }) => best_point,
            Err(_) => target * 0.5,
        }
    }
}

struct PlusIdentity<'a>(&'a MonotoneField);

impl VectorField for PlusIdentity<'_> {
    fn eval(&self, p: PlaneVec) -> PlaneVec {
        p + self.0.eval(p)
    }
    fn jacobian(&self, p: PlaneVec) -> Mat2 {
        Mat2::IDENTITY + self.0.jacobian(p)
    }
}

impl VectorField for MintyH {
    fn eval(&self, z: PlaneVec) -> PlaneVec {
        let xi = self.preimage(z);
        xi - self.field.eval(xi)
    }

    fn jacobian(&self, z: PlaneVec) -> Mat2 {
        let xi = self.preimage(z);
        let dg = self.field.jacobian(xi);
        match (Mat2::IDENTITY + dg).inverse() {
            Some(inv) => (Mat2::IDENTITY - dg) * inv * Mat2::CONJ,
            None => fd_jacobian(|p| self.eval(p), z),
        }
    }
}

/// Output of [`minty_forward`].
#[derive(Clone, Debug)]
pub struct MintyForward {
    pub h: LipschitzMap,
    pub field: MonotoneField,
}

impl MintyForward {
    /// The homeomorphism `φ(ξ) = conj(ξ + G(ξ))`.
    pub fn phi(&self, xi: PlaneVec) -> PlaneVec {
        (xi + self.field.eval(xi)).conj()
    }
}

/// Builds `H` with `H(conj(ξ + G(ξ))) = ξ − G(ξ)`.
///
/// This normalization carries no factor ½, so that [`minty_backward`] inverts it exactly.
pub fn minty_forward(field: &MonotoneField) -> Result<MintyForward> {
    let map = MintyH { field: field.clone() };
    let probe = PlaneVec::new(0.25, -0.5);
    invert_field(&PlusIdentity(field), probe, &InvertOptions::with_tol(CORRESPONDENCE_TOL))?;
    let h = LipschitzMap::new(Arc::new(map), Provenance::MintyForward(field.spec().clone()));
    Ok(MintyForward { h, field: field.clone() })
}

/// `conj F(z) = (conj H(z) + z) / 2`, strictly monotone.
struct FBar(LipschitzMap);

impl VectorField for FBar {
    fn eval(&self, z: PlaneVec) -> PlaneVec {
        (self.0.eval(z).conj() + z) * 0.5
    }
    fn jacobian(&self, z: PlaneVec) -> Mat2 {
        (Mat2::CONJ * self.0.jacobian(z) + Mat2::IDENTITY) * 0.5
    }
}

/// `i conj F*(z) = (z − conj H(z)) / 2`, strictly monotone.
struct FStarRot(LipschitzMap);

impl VectorField for FStarRot {
    fn eval(&self, z: PlaneVec) -> PlaneVec {
        (z - self.0.eval(z).conj()) * 0.5
    }
    fn jacobian(&self, z: PlaneVec) -> Mat2 {
        (Mat2::IDENTITY - Mat2::CONJ * self.0.jacobian(z)) * 0.5
    }
}

/// Shared evaluation core for `G` and `G*`.
#[derive(Clone)]
pub struct Correspondence {
    h: LipschitzMap,
}

impl Correspondence {
    pub fn new(h: LipschitzMap) -> Self {
        Self { h }
    }

    pub fn h(&self) -> &LipschitzMap {
        &self.h
    }

    /// `F(z) = (H(z) + z̄) / 2`.
    pub fn f(&self, z: PlaneVec) -> PlaneVec {
        (self.h.eval(z) + z.conj()) * 0.5
    }

    /// `F*(z) = (H(z) − z̄) / (2i)`.
    pub fn f_star(&self, z: PlaneVec) -> PlaneVec {
        ((self.h.eval(z) - z.conj()) * 0.5).rot_neg()
    }

    /// `z` with `F(z) = η`.
    pub fn f_inverse(&self, eta: PlaneVec) -> Result<PlaneVec> {
        let target = eta.conj();
        let two = eta * 2.0;
        // From z̄ = 2η − H(z): one fixed-point step from z = conj(2η).
        let hint = (two - self.h.eval(two.conj())).conj();
        let opts = InvertOptions::with_tol(CORRESPONDENCE_TOL * (1.0 + eta.norm())).hint(hint);
        invert_field(&FBar(self.h.clone()), target, &opts).map(|r| r.preimage)
    }

    /// `z` with `F*(z) = η`.
    pub fn f_star_inverse(&self, eta: PlaneVec) -> Result<PlaneVec> {
        let target = eta.conj().rot();
        let two = target * 2.0;
        let hint = two + self.h.eval(two).conj();
        let opts = InvertOptions::with_tol(CORRESPONDENCE_TOL * (1.0 + eta.norm())).hint(hint);
        invert_field(&FStarRot(self.h.clone()), target, &opts).map(|r| r.preimage)
    }

    /// `G(η) = −i F*(F^{-1}(η)) = (z̄ − H(z)) / 2`.
    pub fn g(&self, eta: PlaneVec) -> PlaneVec {
        let z = self.f_inverse(eta).unwrap_or_else(|e| best_point(e, eta));
        (z.conj() - self.h.eval(z)) * 0.5
    }

    /// `G*(η) = i F(F*^{-1}(η)) = i (H(z) + z̄) / 2`.
    pub fn g_star(&self, eta: PlaneVec) -> PlaneVec {
        let z = self.f_star_inverse(eta).unwrap_or_else(|e| best_point(e, eta));
        ((self.h.eval(z) + z.conj()) * 0.5).rot()
    }

    fn dg(&self, eta: PlaneVec) -> Mat2 {
        let z = self.f_inverse(eta).unwrap_or_else(|e| best_point(e, eta));
        let dh = self.h.jacobian(z);
        match (Mat2::CONJ + dh).inverse() {
            Some(inv) => (Mat2::CONJ - dh) * inv,
            None => fd_jacobian(|p| self.g(p), eta),
        }
    }

    fn dg_star(&self, eta: PlaneVec) -> Mat2 {
        let z = self.f_star_inverse(eta).unwrap_or_else(|e| best_point(e, eta));
        let dh = self.h.jacobian(z);
        match (Mat2::CONJ - dh).inverse() {
            Some(inv) => Mat2::ROT * (dh + Mat2::CONJ) * inv * (Mat2::ROT * -1.0),
            None => fd_jacobian(|p| self.g_star(p), eta),
        }
    }
}

fn best_point(err: Error, fallback: PlaneVec) -> PlaneVec {
    match err {
        Error::NonConvergence { best_point, .. } => best_point,
        _ => fallback,
    }
}

struct GMap(Correspondence);

impl VectorField for GMap {
    fn eval(&self, eta: PlaneVec) -> PlaneVec {
        self.0.g(eta)
    }
    fn jacobian(&self, eta: PlaneVec) -> Mat2 {
        self.0.dg(eta)
    }
}

struct GStarMap(Correspondence);

impl VectorField for GStarMap {
    fn eval(&self, eta: PlaneVec) -> PlaneVec {
        self.0.g_star(eta)
    }
    fn jacobian(&self, eta: PlaneVec) -> Mat2 {
        self.0.dg_star(eta)
    }
}

/// Output of [`minty_backward`].
#[derive(Clone, Debug)]
pub struct MintyBackward {
    pub g: MonotoneField,
    pub g_star: MonotoneField,
    pub maps: CorrespondenceHandle,
}

/// Access to `F`, `F*` and their inverses.
#[derive(Clone)]
pub struct CorrespondenceHandle(pub Correspondence);

impl fmt::Debug for CorrespondenceHandle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Correspondence({})", self.0.h.label())
    }
}

/// `F = (H + z̄)/2`, `F* = (H − z̄)/(2i)`, `G = −i F* ∘ F^{-1}`, `G* = i F ∘ F*^{-1}`.
pub fn minty_backward(h: &LipschitzMap, spec: FieldSpec) -> Result<MintyBackward> {
    let corr = Correspondence::new(h.clone());
    // Probe both inversions once so a broken H fails here rather than inside evaluation.
    for probe in [PlaneVec::new(0.3, 0.1), PlaneVec::new(-0.2, 0.4)] {
        corr.f_inverse(probe)?;
        corr.f_star_inverse(probe)?;
    }
    let note = format!("from Beltrami datum {}", h.label());
    let g = MonotoneField::new(spec.clone(), Arc::new(GMap(corr.clone())), false, note.clone());
    let g_star = MonotoneField::new(spec.dual(), Arc::new(GStarMap(corr.clone())), false, note);
    Ok(MintyBackward { g, g_star, maps: CorrespondenceHandle(corr) })
}

/// Γ± quotients of one difference.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BeltramiQuotient {
    pub base: ComplexVal,
    pub offset: ComplexVal,
    #[serde(rename = "L")]
    pub l: ComplexVal,
    /// `(1 − |L|²) / |1 + L|²`.
    pub gamma_plus: f64,
    /// `(1 − |L|²) / |1 − L|²`.
    pub gamma_minus: f64,
}

fn gamma_ratio(num: f64, den: f64) -> f64 {
    if den < 1e-28 {
        f64::INFINITY
    } else {
        num / den
    }
}

pub fn beltrami_quotient(h: &LipschitzMap, base: PlaneVec, offset: PlaneVec) -> Result<BeltramiQuotient> {
    if offset.norm() == 0.0 {
        return Err(invalid("Beltrami quotient offset must be nonzero"));
    }
    let l = h.difference_quotient(base, offset);
    let num = 1.0 - l.norm_sqr();
    Ok(BeltramiQuotient {
        base: base.to_complex(),
        offset: offset.to_complex(),
        l,
        gamma_plus: gamma_ratio(num, (1.0 + l).norm_sqr()),
        gamma_minus: gamma_ratio(num, (1.0 - l).norm_sqr()),
    })
}

/// Offset families used by Γ± scans.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum OffsetPattern {
    /// `n` equally spaced directions at each scale.
    Directions(usize),
    /// Chords of the circle `|z| = |base|` in both senses, `ζ = ξ(e^{±it} − 1)`, `t = scale`,
    /// plus `n` equally spaced directions.
    CircleChords(usize),
}

impl OffsetPattern {
    fn offsets(&self, base: PlaneVec, scale: f64) -> Vec<PlaneVec> {
        let dirs = |n: usize| (0..n).map(move |k| PlaneVec::polar(scale, TAU * k as f64 / n as f64));
        match *self {
            OffsetPattern::Directions(n) => dirs(n.max(1)).collect(),
            OffsetPattern::CircleChords(n) => {
                let mut v: Vec<PlaneVec> = dirs(n).collect();
                if base.norm() > 0.0 {
                    let b = base.to_complex();
                    for t in [scale, -scale] {
                        v.push(PlaneVec::from(b * (Complex64::from_polar(1.0, t) - 1.0)));
                    }
                }
                v
            }
        }
    }
}

/// Minima of Γ± quotients at one scale.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GammaLevel {
    pub scale: f64,
    pub min_gamma_plus: f64,
    pub min_gamma_minus: f64,
    pub argmin_plus: ComplexVal,
    pub argmin_minus: ComplexVal,
}

/// Scale-resolved Γ± scan at one base point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GammaScan {
    pub base: ComplexVal,
    pub levels: Vec<GammaLevel>,
    /// Minima shrink along the scales and end below the candidacy threshold.
    pub gamma_plus_candidate: bool,
    pub gamma_minus_candidate: bool,
    pub threshold: f64,
}

/// Default threshold below which a vanishing trend flags Γ± candidacy.
pub const GAMMA_CANDIDACY: f64 = 0.05;

/// Geometric scales `1e-1, 1e-2, ..., 1e-5`.
pub fn default_gamma_scales() -> Vec<f64> {
    (1..=5).map(|k| 10f64.powi(-k)).collect()
}

pub fn gamma_classify(h: &LipschitzMap, base: PlaneVec, scales: &[f64], pattern: OffsetPattern) -> Result<GammaScan> {
    if scales.is_empty() || scales.iter().any(|s| !(*s > 0.0)) {
        return Err(invalid("gamma scan needs positive scales"));
    }
    let mut levels = Vec::with_capacity(scales.len());
    for &scale in scales {
        let mut level = GammaLevel {
            scale,
            min_gamma_plus: f64::INFINITY,
            min_gamma_minus: f64::INFINITY,
            argmin_plus: Complex64::new(0.0, 0.0),
            argmin_minus: Complex64::new(0.0, 0.0),
        };
        for off in pattern.offsets(base, scale) {
            let q = beltrami_quotient(h, base, off)?;
            if q.gamma_plus < level.min_gamma_plus {
                level.min_gamma_plus = q.gamma_plus;
                level.argmin_plus = q.offset;
            }
            if q.gamma_minus < level.min_gamma_minus {
                level.min_gamma_minus = q.gamma_minus;
                level.argmin_minus = q.offset;
            }
        }
        levels.push(level);
    }
    let trend = |get: fn(&GammaLevel) -> f64| {
        let vals: Vec<f64> = levels.iter().map(get).collect();
        let shrinking = vals.windows(2).all(|w| w[1] <= w[0] * 1.01 + 1e-15);
        shrinking && *vals.last().unwrap() < GAMMA_CANDIDACY
    };
    Ok(GammaScan {
        base: base.to_complex(),
        gamma_plus_candidate: trend(|l| l.min_gamma_plus),
        gamma_minus_candidate: trend(|l| l.min_gamma_minus),
        levels,
        threshold: GAMMA_CANDIDACY,
    })
}

/// Beltrami data that can be named in configs.
#[derive(Clone, Debug, PartialEq)]
pub enum LipschitzSpec {
    Zero,
    /// `a z + b z̄` with real-and-imaginary parts given separately.
    Affine { a: ComplexVal, b: ComplexVal },
    ExplicitS6,
    Minty(FieldSpec),
}

impl LipschitzSpec {
    pub fn build(&self) -> Result<LipschitzMap> {
        match self {
            LipschitzSpec::Zero => Ok(LipschitzMap::zero()),
            LipschitzSpec::Affine { a, b } => LipschitzMap::affine(*a, *b, Complex64::new(0.0, 0.0)),
            LipschitzSpec::ExplicitS6 => Ok(counterexample::shared_counterexample()?.h.clone()),
            LipschitzSpec::Minty(spec) => Ok(minty_forward(&crate::field::make_catalog_field(spec)?)?.h),
        }
    }
}

impl fmt::Display for LipschitzSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LipschitzSpec::Zero => write!(f, "zero"),
            LipschitzSpec::Affine { a, b } => write!(f, "affine({}, {}, {}, {})", a.re, a.im, b.re, b.im),
            LipschitzSpec::ExplicitS6 => write!(f, "explicit_s6"),
            LipschitzSpec::Minty(spec) => write!(f, "minty({spec})"),
        }
    }
}

impl std::str::FromStr for LipschitzSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "zero" {
            return Ok(LipschitzSpec::Zero);
        }
        if s == "explicit_s6" {
            return Ok(LipschitzSpec::ExplicitS6);
        }
        let inner = |prefix: &str| {
            s.strip_prefix(prefix)
                .and_then(|rest| rest.strip_suffix(')'))
                .map(str::trim)
        };
        if let Some(body) = inner("minty(") {
            return Ok(LipschitzSpec::Minty(body.parse()?));
        }
        if let Some(body) = inner("affine(") {
            let nums: std::result::Result<Vec<f64>, _> = body.split(',').map(|t| t.trim().parse::<f64>()).collect();
            let nums = nums.map_err(|e| Error::Parse(format!("affine: {e}")))?;
            if nums.len() != 4 {
                return Err(Error::Parse("affine takes four numbers: a_re, a_im, b_re, b_im".into()));
            }
            let (a, b) = (Complex64::new(nums[0], nums[1]), Complex64::new(nums[2], nums[3]));
            if !(a.norm() + b.norm() < 1.0) {
                return Err(invalid("affine map needs |a| + |b| < 1"));
            }
            return Ok(LipschitzSpec::Affine { a, b });
        }
        Err(Error::Parse(format!("unknown Beltrami datum '{s}'")))
    }
}

impl Serialize for LipschitzSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for LipschitzSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}
