//! The explicit Lipschitz, non-C¹ solution: `H(re^{iθ}) = g(r) e^{3iθ} / 3`,
//! `f(re^{iθ}) = (2/3) r i e^{2iθ}`, `u = −(r/3) sin 2θ`.

use super::{minty_backward, Correspondence, LipschitzMap, Provenance};
use crate::error::{Error, Result};
use crate::field::{quotients, FieldSpec, MonotoneField, VectorField};
use crate::geom::{fd_jacobian, Mat2, PlaneVec};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, TAU};
use std::sync::{Arc, OnceLock};

/// Start and end of the cutoff ramp in the radial profile.
pub const CUTOFF_START: f64 = 2.2;
pub const CUTOFF_END: f64 = 3.0;

/// `C^∞` step from 0 at `t ≤ 0` to 1 at `t ≥ 1`.
fn smooth_step(t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    if t >= 1.0 {
        return 1.0;
    }
    let a = (-1.0 / t).exp();
    let b = (-1.0 / (1.0 - t)).exp();
    a / (a + b)
}

fn smooth_step_slope(t: f64) -> f64 {
    if t <= 0.0 || t >= 1.0 {
        return 0.0;
    }
    let a = (-1.0 / t).exp();
    let b = (-1.0 / (1.0 - t)).exp();
    a * b * (1.0 / (t * t) + 1.0 / ((1.0 - t) * (1.0 - t))) / ((a + b) * (a + b))
}

/// Cutoff `χ`: 1 on `[0, 2.2]`, 0 on `[3, ∞)`.
pub fn chi(r: f64) -> f64 {
    1.0 - smooth_step((r - CUTOFF_START) / (CUTOFF_END - CUTOFF_START))
}

pub fn chi_slope(r: f64) -> f64 {
    -smooth_step_slope((r - CUTOFF_START) / (CUTOFF_END - CUTOFF_START)) / (CUTOFF_END - CUTOFF_START)
}

/// Radial profile `g(r) = r exp(−(r − 1)²/2) χ(r)`.
pub fn profile(r: f64) -> f64 {
    let d = r - 1.0;
    r * (-0.5 * d * d).exp() * chi(r)
}

/// `g'(r) = exp(−(r − 1)²/2) [(1 − r(r − 1)) χ(r) + r χ'(r)]`.
pub fn profile_slope(r: f64) -> f64 {
    let d = r - 1.0;
    (-0.5 * d * d).exp() * ((1.0 - r * d) * chi(r) + r * chi_slope(r))
}

/// `H(z) = g(|z|) (z/|z|)³ / 3`, with `H(0) = 0`.
struct CubicDatum;

impl VectorField for CubicDatum {
    fn eval(&self, z: PlaneVec) -> PlaneVec {
        let r = z.norm();
        if r == 0.0 || r >= CUTOFF_END {
            return PlaneVec::ZERO;
        }
        let w = z.to_complex() / r;
        PlaneVec::from(w * w * w * (profile(r) / 3.0))
    }

    fn jacobian(&self, z: PlaneVec) -> Mat2 {
        let r = z.norm();
        if r == 0.0 {
            return fd_jacobian(|p| self.eval(p), z);
        }
        if r >= CUTOFF_END {
            return Mat2::default();
        }
        let e = z * (1.0 / r);
        let w = e.to_complex();
        let e3 = PlaneVec::from(w * w * w);
        Mat2::outer(e3 * (profile_slope(r) / 3.0), e) + Mat2::outer(e3.rot() * (profile(r) / r), e.rot())
    }
}

/// Build-time audit of the radial profile.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfileAudit {
    pub g_at_one: f64,
    pub g_slope_at_one: f64,
    pub samples: usize,
    /// Largest sampled `|g(r)| / r` with `r ≠ 1`.
    pub max_g_over_r: f64,
    /// Largest sampled `|g'(r)| / 3`.
    pub max_slope_over_3: f64,
    /// `g(r)/r` as `r → 0`.
    pub origin_ratio: f64,
    /// `g` vanishes identically past the cutoff.
    pub vanishes_outside: bool,
    pub pass: bool,
}

pub const PROFILE_SAMPLES: usize = 100_000;

pub fn audit_profile(samples: usize) -> ProfileAudit {
    let top = CUTOFF_END + 0.5;
    let mut max_ratio: f64 = 0.0;
    let mut max_slope: f64 = 0.0;
    let mut rs: Vec<f64> = (0..samples).map(|k| top * (k as f64 + 0.5) / samples as f64).collect();
    rs.extend((1..=6).flat_map(|j| [1.0 + 10f64.powi(-j), 1.0 - 10f64.powi(-j)]));
    for &r in &rs {
        if r != 1.0 {
            max_ratio = max_ratio.max(profile(r).abs() / r);
        }
        max_slope = max_slope.max(profile_slope(r).abs() / 3.0);
    }
    let vanishes_outside = (0..1000).all(|k| profile(CUTOFF_END + k as f64 * 0.01) == 0.0);
    let g_at_one = profile(1.0);
    let g_slope_at_one = profile_slope(1.0);
    let origin_ratio = profile(1e-12) / 1e-12;
    let pass = g_at_one == 1.0
        && g_slope_at_one == 1.0
        && max_ratio < 1.0
        && max_slope < 1.0
        && origin_ratio < 1.0
        && vanishes_outside;
    ProfileAudit {
        g_at_one,
        g_slope_at_one,
        samples: rs.len(),
        max_g_over_r: max_ratio,
        max_slope_over_3: max_slope,
        origin_ratio,
        vanishes_outside,
        pass,
    }
}

/// The explicit datum, its solution and the associated monotone fields.
#[derive(Clone, Debug)]
pub struct CounterexampleBundle {
    pub h: LipschitzMap,
    pub g_field: MonotoneField,
    pub g_star: MonotoneField,
    pub audit: ProfileAudit,
    corr: super::CorrespondenceHandle,
}

impl CounterexampleBundle {
    pub fn correspondence(&self) -> &Correspondence {
        &self.corr.0
    }

    /// `f(z) = (2/3) i z² / |z|`.
    pub fn f(&self, z: PlaneVec) -> PlaneVec {
        let r = z.norm();
        if r == 0.0 {
            return PlaneVec::ZERO;
        }
        let c = z.to_complex();
        PlaneVec::from(Complex64::i() * c * c * (2.0 / (3.0 * r)))
    }

    /// `f_z = i e^{iθ}`.
    pub fn f_z(&self, z: PlaneVec) -> PlaneVec {
        let r = z.norm();
        if r == 0.0 {
            return PlaneVec::new(0.0, 1.0);
        }
        (z * (1.0 / r)).rot()
    }

    /// `f_z̄ = −(i/3) e^{3iθ}`.
    pub fn f_zbar(&self, z: PlaneVec) -> PlaneVec {
        let r = z.norm();
        let w = if r == 0.0 { Complex64::new(1.0, 0.0) } else { z.to_complex() / r };
        PlaneVec::from(-Complex64::i() * w * w * w / 3.0)
    }

    /// `u = −(r/3) sin 2θ = −2xy / (3r)`.
    pub fn u(&self, z: PlaneVec) -> f64 {
        let r = z.norm();
        if r == 0.0 {
            0.0
        } else {
            -2.0 * z.x * z.y / (3.0 * r)
        }
    }

    /// `v = (r/3) cos 2θ = (x² − y²) / (3r)`.
    pub fn v(&self, z: PlaneVec) -> f64 {
        let r = z.norm();
        if r == 0.0 {
            0.0
        } else {
            (z.x * z.x - z.y * z.y) / (3.0 * r)
        }
    }

    /// `∇u = (f_z̄ + conj f_z) / 2`.
    pub fn grad_u(&self, z: PlaneVec) -> PlaneVec {
        (self.f_zbar(z) + self.f_z(z).conj()) * 0.5
    }

    /// `∇v = (f_z̄ − conj f_z) / (2i)`.
    pub fn grad_v(&self, z: PlaneVec) -> PlaneVec {
        ((self.f_zbar(z) - self.f_z(z).conj()) * 0.5).rot_neg()
    }

    /// `F(z) = (H(z) + z̄) / 2`.
    pub fn big_f(&self, z: PlaneVec) -> PlaneVec {
        self.corr.0.f(z)
    }

    /// `det ∇F` by fourth-order central differences with step `h`.
    pub fn det_grad_f_fd(&self, z: PlaneVec, h: f64) -> f64 {
        let d = |e: PlaneVec| {
            let f = |t: f64| self.big_f(z + e * t);
            (f(-2.0 * h) - f(-h) * 8.0 + f(h) * 8.0 - f(2.0 * h)) * (1.0 / (12.0 * h))
        };
        let dx = d(PlaneVec::new(1.0, 0.0));
        let dy = d(PlaneVec::new(0.0, 1.0));
        dx.cross(dy)
    }
}

/// Builds the bundle, refusing if the profile audit fails.
pub fn build_counterexample() -> Result<CounterexampleBundle> {
    let audit = audit_profile(PROFILE_SAMPLES);
    if !audit.pass {
        return Err(Error::AuditFailed(format!("radial profile violates its constraints: {audit:?}")));
    }
    let h = LipschitzMap::new(Arc::new(CubicDatum), Provenance::ExplicitS6);
    let back = minty_backward(&h, FieldSpec::CounterexampleS6)?;
    let note = "Lipschitz; degenerate and singular exactly on the image of the unit circle";
    let g_field = MonotoneField::new(FieldSpec::CounterexampleS6, back.g.map(), false, note);
    Ok(CounterexampleBundle { h, g_field, g_star: back.g_star, audit, corr: back.maps })
}

/// Process-wide bundle, built once.
pub fn shared_counterexample() -> Result<&'static CounterexampleBundle> {
    static BUNDLE: OnceLock<std::result::Result<CounterexampleBundle, String>> = OnceLock::new();
    BUNDLE
        .get_or_init(|| build_counterexample().map_err(|e| e.to_string()))
        .as_ref()
        .map_err(|e| Error::AuditFailed(e.clone()))
}

/// One row of the symmetric-quotient audit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StildeRow {
    pub theta: f64,
    pub base: PlaneVec,
    pub scale: f64,
    /// Largest `⟨D^σG, σ⟩ / |σ|²` over the sampled directions.
    pub max_sym_quotient: f64,
    /// `2 / sin²(2θ)`.
    pub closed_form: f64,
    pub relative_error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StildeAudit {
    pub rows: Vec<StildeRow>,
    /// Rows with `θ → 0`, used for the growth check.
    pub approach: Vec<StildeRow>,
    /// The approach sequence increases strictly and overshoots `growth_bound`.
    pub grows_without_bound: bool,
    pub growth_bound: f64,
}

fn stilde_row(bundle: &CounterexampleBundle, theta: f64, scale: f64, directions: usize) -> StildeRow {
    let base = bundle.big_f(PlaneVec::polar(1.0, theta));
    let mut best = f64::NEG_INFINITY;
    for k in 0..directions {
        let off = PlaneVec::polar(scale, std::f64::consts::PI * k as f64 / directions as f64);
        let (ql, _) = quotients(&bundle.g_field, base, off);
        best = best.max(ql);
    }
    let s = (2.0 * theta).sin();
    let closed_form = 2.0 / (s * s);
    StildeRow { theta, base, scale, max_sym_quotient: best, closed_form, relative_error: (best - closed_form).abs() / closed_form }
}

/// Samples the symmetric quotient of `G` at `F(e^{iθ})`.
pub fn counterexample_stilde_audit(
    bundle: &CounterexampleBundle,
    thetas: &[f64],
    scale: f64,
    directions: usize,
) -> StildeAudit {
    let rows = thetas.iter().map(|&t| stilde_row(bundle, t, scale, directions)).collect();
    let approach: Vec<StildeRow> = (1..=6)
        .map(|k| stilde_row(bundle, 0.4 / 2f64.powi(k - 1), scale.min(1e-6), directions))
        .collect();
    let growth_bound = 1000.0;
    let grows_without_bound = approach.windows(2).all(|w| w[1].max_sym_quotient > w[0].max_sym_quotient)
        && approach.last().map(|r| r.max_sym_quotient > growth_bound).unwrap_or(false);
    StildeAudit { rows, approach, grows_without_bound, growth_bound }
}

/// Angles on the circle avoiding the multiples of `π/4`.
pub fn off_grid_angles(n: usize) -> Vec<f64> {
    (0..n)
        .map(|k| TAU * (k as f64 + 0.5) / n as f64)
        .filter(|t| {
            let m = (t / (FRAC_PI_2 / 2.0)).round() * FRAC_PI_2 / 2.0;
            (t - m).abs() > 0.05
        })
        .collect()
}

/// One named check of the bundle audit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuditRow {
    pub name: String,
    pub description: String,
    pub value: f64,
    pub threshold: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BundleAudit {
    pub profile: ProfileAudit,
    pub rows: Vec<AuditRow>,
    pub pass: bool,
}

fn row(name: &str, description: &str, value: f64, threshold: f64, pass: bool) -> AuditRow {
    AuditRow { name: name.into(), description: description.into(), value, threshold, pass }
}

/// Runs every check of the explicit datum: profile constraints, unit modulus of `f_z` on the
/// circle, the determinant of `∇F` there, the Γ± scan and the symmetric quotient.
pub fn audit_bundle(bundle: &CounterexampleBundle) -> Result<BundleAudit> {
    use super::{gamma_classify, OffsetPattern};
    let mut rows = Vec::new();
    let a = &bundle.audit;
    rows.push(row("g(1)=1", "radial profile equals 1 at r = 1", a.g_at_one, 1.0, a.g_at_one == 1.0));
    rows.push(row(
        "g constraints",
        "max |g(r)|/r and |g'(r)|/3 off r = 1",
        a.max_g_over_r.max(a.max_slope_over_3),
        1.0,
        a.max_g_over_r < 1.0 && a.max_slope_over_3 < 1.0 && a.vanishes_outside,
    ));
    let fz_err = (0..360)
        .map(|k| (bundle.f_z(PlaneVec::polar(1.0, TAU * k as f64 / 360.0)).norm() - 1.0).abs())
        .fold(0.0, f64::max);
    rows.push(row("|f_z|=1", "max ||f_z| - 1| at 360 circle points", fz_err, 1e-12, fz_err <= 1e-12));
    let det_err = (0..36)
        .map(|k| {
            let t = TAU * k as f64 / 36.0 + 0.01;
            (bundle.det_grad_f_fd(PlaneVec::polar(1.0, t), 1e-3) + (2.0 * t).sin().powi(2) / 3.0).abs()
        })
        .fold(0.0, f64::max);
    rows.push(row("det ∇F", "max |det ∇F(e^{iθ}) + sin²(2θ)/3| at 36 angles", det_err, 1e-8, det_err <= 1e-8));
    let scales = [1e-2, 1e-3, 1e-4];
    let mut circle_max: f64 = 0.0;
    for t in off_grid_angles(24) {
        let scan = gamma_classify(&bundle.h, PlaneVec::polar(1.0, t), &scales, OffsetPattern::CircleChords(16))?;
        let last = scan.levels.last().expect("nonempty scales");
        circle_max = circle_max.max(last.min_gamma_plus.max(last.min_gamma_minus));
    }
    rows.push(row("gamma circle", "largest Γ± minimum at scale 1e-4 on the circle", circle_max, 0.05, circle_max < 0.05));
    let mut inner_min = f64::INFINITY;
    for base in [PlaneVec::ZERO, PlaneVec::polar(0.02, 1.0), PlaneVec::polar(0.05, 2.0)] {
        let scan = gamma_classify(&bundle.h, base, &scales, OffsetPattern::CircleChords(16))?;
        for l in &scan.levels {
            inner_min = inner_min.min(l.min_gamma_plus.min(l.min_gamma_minus));
        }
    }
    rows.push(row("gamma interior", "smallest Γ± minimum at interior points", inner_min, 0.2, inner_min > 0.2));
    let st = counterexample_stilde_audit(bundle, &[std::f64::consts::PI / 3.0], 1e-4, 64);
    let rel = st.rows[0].relative_error;
    rows.push(row("symmetric quotient", "relative error against 2/sin²(2θ) at θ = π/3", rel, 0.1, rel < 0.1));
    rows.push(row("quotient growth", "symmetric quotient grows as θ → 0", st.approach.last().map(|r| r.max_sym_quotient).unwrap_or(0.0), st.growth_bound, st.grows_without_bound));
    let pass = rows.iter().all(|r| r.pass);
    Ok(BundleAudit { profile: a.clone(), rows, pass })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::beltrami::{audit_lipschitz, gamma_classify, OffsetPattern};
    use std::f64::consts::PI;

    fn bundle() -> &'static CounterexampleBundle {
        shared_counterexample().unwrap()
    }

    #[test]
    fn profile_constraints() {
        let a = audit_profile(PROFILE_SAMPLES);
        assert!(a.pass, "{a:?}");
        assert_eq!(profile(1.0), 1.0);
        assert!(a.max_g_over_r < 1.0 && a.max_slope_over_3 < 1.0);
        assert!((a.origin_ratio - (-0.5f64).exp()).abs() < 1e-10);
    }

    #[test]
    fn profile_slope_matches_differences() {
        for r in [0.3, 1.0, 1.7, 2.5, 2.9] {
            let h = 1e-6;
            let fd = (profile(r + h) - profile(r - h)) / (2.0 * h);
            assert!((fd - profile_slope(r)).abs() < 1e-7, "r = {r}");
        }
    }

    #[test]
    fn datum_on_circle_is_cube_over_three() {
        let b = bundle();
        for k in 0..36 {
            let z = PlaneVec::polar(1.0, TAU * k as f64 / 36.0).to_complex();
            let h = b.h.eval_complex(z);
            assert!((h - z * z * z / 3.0).norm() < 1e-15);
        }
        audit_lipschitz(&b.h, 3.5, 20_000, 5).unwrap();
    }

    #[test]
    fn datum_jacobian_matches_differences() {
        let b = bundle();
        for z in [PlaneVec::new(0.3, 0.4), PlaneVec::new(-1.2, 0.8), PlaneVec::new(2.5, -0.3)] {
            let a = b.h.jacobian(z);
            let n = fd_jacobian(|p| b.h.eval(p), z);
            assert!((a - n).frobenius() < 1e-6, "{z:?}");
        }
    }

    #[test]
    fn wirtinger_derivatives_and_beltrami_equation() {
        let b = bundle();
        for k in 0..24 {
            for r in [0.2, 1.0, 3.0] {
                let z = PlaneVec::polar(r, TAU * k as f64 / 24.0 + 0.1);
                let fz = b.f_z(z);
                assert!((fz.norm() - 1.0).abs() < 1e-15);
                let fzb = b.f_zbar(z).to_complex();
                assert!((fzb - fz.to_complex().powi(3) / 3.0).norm() < 1e-15);
                assert!((fzb - b.h.eval(fz).to_complex()).norm() < 1e-15);
                // Wirtinger derivatives by central differences of f.
                let h = 1e-6;
                let fx = (b.f(z + PlaneVec::new(h, 0.0)) - b.f(z - PlaneVec::new(h, 0.0))) * (0.5 / h);
                let fy = (b.f(z + PlaneVec::new(0.0, h)) - b.f(z - PlaneVec::new(0.0, h))) * (0.5 / h);
                let dz = (fx.to_complex() - Complex64::i() * fy.to_complex()) * 0.5;
                let dzb = (fx.to_complex() + Complex64::i() * fy.to_complex()) * 0.5;
                assert!((dz - fz.to_complex()).norm() < 1e-8);
                assert!((dzb - fzb).norm() < 1e-8);
            }
        }
    }

    #[test]
    fn u_and_v_are_halves_of_f() {
        let b = bundle();
        for k in 0..20 {
            let z = PlaneVec::polar(0.1 + 0.05 * k as f64, 0.7 * k as f64);
            let (r, t) = (z.norm(), z.arg());
            assert!((b.u(z) - (-(r / 3.0) * (2.0 * t).sin())).abs() < 1e-15);
            assert!((b.u(z) - 0.5 * b.f(z).x).abs() < 1e-15);
            assert!((b.v(z) - 0.5 * b.f(z).y).abs() < 1e-15);
            let h = 1e-6;
            let gx = (b.u(z + PlaneVec::new(h, 0.0)) - b.u(z - PlaneVec::new(h, 0.0))) / (2.0 * h);
            let gy = (b.u(z + PlaneVec::new(0.0, h)) - b.u(z - PlaneVec::new(0.0, h))) / (2.0 * h);
            assert!((PlaneVec::new(gx, gy) - b.grad_u(z)).norm() < 1e-8);
        }
    }

    #[test]
    fn conjugate_relation_holds_on_exact_solution() {
        let b = bundle();
        for k in 0..16 {
            let z = PlaneVec::polar(0.5, TAU * k as f64 / 16.0 + 0.05);
            let lhs = b.g_field.eval(b.grad_u(z));
            let rhs = b.grad_v(z).rot_neg();
            assert!((lhs - rhs).norm() < 1e-9, "{lhs:?} vs {rhs:?}");
            assert!((b.grad_u(z) - b.big_f(b.f_z(z))).norm() < 1e-15);
        }
    }

    #[test]
    fn determinant_on_circle() {
        let b = bundle();
        for k in 0..36 {
            let t = TAU * k as f64 / 36.0 + 0.01;
            let det = b.det_grad_f_fd(PlaneVec::polar(1.0, t), 1e-3);
            let oracle = -(2.0 * t).sin().powi(2) / 3.0;
            assert!((det - oracle).abs() < 1e-8, "θ = {t}: {det} vs {oracle}");
        }
    }

    #[test]
    fn gammas_vanish_on_circle_and_stay_positive_inside() {
        let b = bundle();
        let theta = PI / 3.0;
        let scan = gamma_classify(&b.h, PlaneVec::polar(1.0, theta), &[1e-2, 1e-3, 1e-4], OffsetPattern::CircleChords(16)).unwrap();
        let last = scan.levels.last().unwrap();
        assert!(last.min_gamma_plus < 0.05 && last.min_gamma_minus < 0.05);
        assert!(scan.gamma_plus_candidate && scan.gamma_minus_candidate);
        let l = b.h.difference_quotient(PlaneVec::polar(1.0, theta), PlaneVec::polar(1e-6, theta + PI / 2.0));
        assert!((l - (-Complex64::from_polar(1.0, 4.0 * theta))).norm() < 1e-5);
        for base in [PlaneVec::ZERO, PlaneVec::polar(0.02, 1.0)] {
            let scan = gamma_classify(&b.h, base, &[1e-2, 1e-3, 1e-4], OffsetPattern::CircleChords(16)).unwrap();
            for l in &scan.levels {
                assert!(l.min_gamma_plus > 0.2 && l.min_gamma_minus > 0.2, "{base:?}: {l:?}");
            }
        }
    }

    #[test]
    fn symmetric_quotient_closed_form() {
        let b = bundle();
        let audit = counterexample_stilde_audit(b, &[PI / 4.0, PI / 3.0], 1e-4, 64);
        for row in &audit.rows {
            assert!(row.relative_error < 0.1, "{row:?}");
        }
        assert!(audit.grows_without_bound, "{:?}", audit.approach);
    }

    #[test]
    fn bundle_audit_passes() {
        let a = audit_bundle(bundle()).unwrap();
        assert!(a.pass, "{:?}", a.rows);
        assert_eq!(a.rows.len(), 8);
    }

    #[test]
    fn off_grid_angles_avoid_quarter_multiples() {
        let a = off_grid_angles(360);
        assert!(a.len() > 300);
        for t in a {
            assert!(((4.0 * t / PI) - (4.0 * t / PI).round()).abs() > 1e-3);
        }
    }
}
