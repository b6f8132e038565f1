//! Acceptance suite: one test per criterion, each printing a PASS/FAIL line.
//!
//! Run with `cargo test --test acceptance -- --nocapture` to see the lines. Tests hold a shared
//! lock so the wall-clock budgets are measured without competing work.

use monoplane::beltrami::counterexample::{counterexample_stilde_audit, off_grid_angles, profile, profile_slope, shared_counterexample, CUTOFF_END};
use monoplane::beltrami::linear::linear_analyze;
use monoplane::beltrami::{gamma_classify, minty_backward, minty_forward, OffsetPattern};
use monoplane::classify::{build_covering, certified_radius, sample_ellipticity, stilde_inclusion_audit, CoveringCertificate, RadiusInputs};
use monoplane::diagnostics::{cacciopoli_ratio, gradient_image, maxmin_check, MaxMinOptions, Side};
use monoplane::duality::dual_field;
use monoplane::field::monotonicity_audit;
use monoplane::geom::Rect;
use monoplane::solver::conjugate::conjugate_report;
use monoplane::solver::{build_disc_mesh, GridFunction, SolveOptions, SolverContext};
use monoplane::{FieldSpec, MonotoneField, PlaneVec};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::{PI, TAU};
use std::sync::{Arc, Mutex, MutexGuard};
use std::time::Instant;

static SERIAL: Mutex<()> = Mutex::new(());

fn serial() -> MutexGuard<'static, ()> {
    SERIAL.lock().unwrap_or_else(|e| e.into_inner())
}

fn verdict(n: u32, pass: bool, detail: impl AsRef<str>) -> bool {
    println!("{} criterion {n}: {}", if pass { "PASS" } else { "FAIL" }, detail.as_ref());
    pass
}

fn sci(v: &[f64]) -> String {
    format!("[{}]", v.iter().map(|x| format!("{x:.3e}")).collect::<Vec<_>>().join(", "))
}

fn field(text: &str) -> MonotoneField {
    MonotoneField::from_spec(&text.parse::<FieldSpec>().unwrap()).unwrap()
}

fn ctx(n: f64) -> SolverContext {
    SolverContext::new(Arc::new(build_disc_mesh(1.0 / n).unwrap())).unwrap()
}

fn random_in_disc(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> PlaneVec {
    let r = (lo * lo + (hi * hi - lo * lo) * rng.random::<f64>()).sqrt();
    PlaneVec::polar(r, TAU * rng.random::<f64>())
}

/// `u = x² − y²`, boundary trace `cos 2t`.
fn harmonic_exact(p: PlaneVec) -> f64 {
    p.x * p.x - p.y * p.y
}

fn harmonic_boundary(t: f64) -> f64 {
    (2.0 * t).cos()
}

/// Trace of the counterexample solution `u = −(r/3) sin 2θ` on the unit circle.
fn counterexample_boundary(t: f64) -> f64 {
    -(2.0 * t).sin() / 3.0
}

fn p4_mollified() -> MonotoneField {
    field("mollify(p_laplacian(p=4), eps=0.1)")
}

fn p4_boundary(t: f64) -> f64 {
    (3.0 * t).cos()
}

// 1. Monotonicity audit.
const MONOTONE_PAIRS: usize = 100_000;
const MONOTONE_RADIUS: f64 = 5.0;
const MONOTONE_BUDGET_S: f64 = 5.0;

#[test]
fn criterion_01_monotonicity_audit() {
    let _g = serial();
    let start = Instant::now();
    let mut failed = Vec::new();
    for spec in FieldSpec::catalog() {
        let f = MonotoneField::from_spec(&spec).unwrap();
        let a = monotonicity_audit(&f, MONOTONE_PAIRS, MONOTONE_RADIUS, 2024).unwrap();
        if !(a.pass && a.min_gap > 0.0) {
            failed.push(format!("{} ({} failures)", spec.label(), a.failures));
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let pass = failed.is_empty() && secs < MONOTONE_BUDGET_S;
    assert!(verdict(1, pass, format!("{} catalog fields, {MONOTONE_PAIRS} pairs in B_5, {secs:.2} s (< {MONOTONE_BUDGET_S} s), failing: {failed:?}", FieldSpec::catalog().len())));
}

// 2. Duality round trip.
const DUAL_POINTS: usize = 1000;
const DUAL_TOL: f64 = 1e-8;
const DUAL_BUDGET_S: f64 = 10.0;

#[test]
fn criterion_02_duality_round_trip() {
    let _g = serial();
    let start = Instant::now();
    let cases = [("identity", 0.0, 2.0), ("p_laplacian(p=4)", 0.1, 2.0), ("mollify(g0_cubic, eps=0.1)", 0.0, 2.0)];
    let mut worst = Vec::new();
    for (text, lo, hi) in cases {
        let g = field(text);
        let dual = dual_field(&g).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let err = (0..DUAL_POINTS)
            .map(|_| {
                let xi = random_in_disc(&mut rng, lo, hi);
                // -i G*(i G(xi))
                (dual.eval(g.eval(xi).rot()).rot_neg() - xi).norm()
            })
            .fold(0.0, f64::max);
        worst.push((text, err));
    }
    let secs = start.elapsed().as_secs_f64();
    let pass = worst.iter().all(|(_, e)| *e <= DUAL_TOL) && secs < DUAL_BUDGET_S;
    assert!(verdict(2, pass, format!("max errors {worst:?} (tol {DUAL_TOL:e}), {secs:.2} s (< {DUAL_BUDGET_S} s)")));
}

// 3. Minty round trips and the p-Laplacian quotient.
const MINTY_GRID: usize = 41;
const MINTY_TOL: f64 = 1e-6;
const QUOTIENT_SAMPLES: usize = 100;
const QUOTIENT_TOL: f64 = 1e-6;

#[test]
fn criterion_03_minty_round_trips() {
    let _g = serial();
    let mut round_trip = Vec::new();
    for text in ["identity", "mollify(g0_cubic, eps=0.1)"] {
        let g = field(text);
        let fw = minty_forward(&g).unwrap();
        let back = minty_backward(&fw.h, g.spec().clone()).unwrap();
        let mut err: f64 = 0.0;
        for i in 0..MINTY_GRID {
            for j in 0..MINTY_GRID {
                let step = 4.0 / (MINTY_GRID - 1) as f64;
                let p = PlaneVec::new(-2.0 + step * i as f64, -2.0 + step * j as f64);
                if p.norm() <= 2.0 {
                    err = err.max((back.g.eval(p) - g.eval(p)).norm());
                }
            }
        }
        round_trip.push((text, err));
    }
    // H(φ(z)) − H(φ(0)) over conj(φ(z) − φ(0)) for G = |ξ|^{p−2} ξ.
    let mut quotient_err: f64 = 0.0;
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for p in [4.0, 3.0] {
        let fw = minty_forward(&field(&format!("p_laplacian(p={p})"))).unwrap();
        let phi0 = fw.phi(PlaneVec::ZERO);
        let h0 = fw.h.eval(phi0).to_complex();
        for _ in 0..QUOTIENT_SAMPLES / 2 {
            let z = random_in_disc(&mut rng, 0.05, 1.5);
            let num = fw.h.eval(fw.phi(z)).to_complex() - h0;
            let den = (fw.phi(z) - phi0).to_complex().conj();
            let s = z.norm().powf(p - 2.0);
            let oracle = (1.0 - s) / (1.0 + s);
            quotient_err = quotient_err.max((num / den - oracle).norm());
        }
    }
    let pass = round_trip.iter().all(|(_, e)| *e <= MINTY_TOL) && quotient_err <= QUOTIENT_TOL;
    assert!(verdict(
        3,
        pass,
        format!("round-trip sup errors {round_trip:?} (tol {MINTY_TOL:e}); quotient sup error {quotient_err:.2e} at {QUOTIENT_SAMPLES} z (tol {QUOTIENT_TOL:e})")
    ));
}

// 4. Classification fidelity.
const PROFILE_SCALES: [f64; 5] = [1e-1, 1e-2, 1e-3, 1e-4, 1e-5];
const DEGENERATE_BELOW: f64 = 1e-3;
const ROTATIONAL_FLOOR: f64 = 0.45;
const BLOWUP: f64 = 10.0;

fn origin_series(text: &str) -> (Vec<f64>, Vec<f64>) {
    let p = sample_ellipticity(&field(text), Rect::centered(1.0), 0.25, &PROFILE_SCALES, 16).unwrap();
    let o = p.lookup(PlaneVec::ZERO).unwrap();
    assert_eq!(o.center, PlaneVec::ZERO);
    (o.per_scale.iter().map(|r| r.lambda_hat).collect(), o.per_scale.iter().map(|r| r.upper_hat).collect())
}

fn decreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] < w[0])
}

fn increasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] > w[0])
}

#[test]
fn criterion_04_classification_profiles() {
    let _g = serial();
    let (lam4, up4) = origin_series("p_laplacian(p=4)");
    let p4 = decreasing(&lam4) && *lam4.last().unwrap() < DEGENERATE_BELOW && up4.iter().all(|u| u.is_finite() && *u <= up4[0]);
    let (lam15, up15) = origin_series("p_laplacian(p=1.5)");
    let p15 = increasing(&up15) && *up15.last().unwrap() >= BLOWUP * up15[0] && lam15.iter().all(|l| *l >= lam15[0]);
    let rot = sample_ellipticity(&field("rotational_gm(m=0.5)"), Rect::centered(1.0), 0.125, &PROFILE_SCALES, 16).unwrap();
    let rot_floor = rot.cells.iter().map(|c| c.lambda_hat).fold(f64::INFINITY, f64::min);
    let o = rot.lookup(PlaneVec::ZERO).unwrap();
    let ups: Vec<f64> = o.per_scale.iter().map(|r| r.upper_hat).collect();
    let rot_ok = rot_floor >= ROTATIONAL_FLOOR && *ups.last().unwrap() >= BLOWUP * ups[0];
    let pass = p4 && p15 && rot_ok;
    assert!(verdict(
        4,
        pass,
        format!(
            "p=4 origin lambda_hat {}, Lambda_hat {}; p=1.5 origin Lambda_hat {}; rotational min lambda_hat {rot_floor:.3} (>= {ROTATIONAL_FLOOR}), origin Lambda_hat {}",
            sci(&lam4),
            sci(&up4),
            sci(&up15),
            sci(&ups)
        )
    ));
}

/// The singular-side flags of `(x³ − y, x + y)` are expected along the horizontal axis.
///
/// Known failure: its Jacobian has symmetric part `diag(3x², 1)`, so the inverse quotient only
/// collapses on the vertical axis, which is where the flags land. See the README.
#[test]
fn criterion_04_g0_singular_line() {
    let _g = serial();
    let audit = stilde_inclusion_audit(&field("g0_cubic"), Rect::centered(1.0), 0.1, &PROFILE_SCALES, 16).unwrap();
    let on_axis = |p: &PlaneVec| p.y.abs() < 1e-12;
    let axis_points = audit.points.iter().filter(|p| on_axis(&p.base)).count();
    let axis_flagged = audit.s_flags.iter().filter(|p| on_axis(p)).count();
    let off_axis = audit.s_flags.len() - axis_flagged;
    let vertical = audit.s_flags.iter().filter(|p| p.x.abs() < 1e-12).count();
    let pass = axis_flagged == axis_points && off_axis == 0 && audit.stilde_flags.is_empty();
    assert!(verdict(
        4,
        pass,
        format!(
            "g0_cubic singular-side flags on the horizontal axis: {axis_flagged}/{axis_points}, off it: {off_axis}; flags on the vertical axis: {vertical}; S̃-side flags: {}",
            audit.stilde_flags.len()
        )
    ));
}

// 5. Counterexample bundle.
const PROFILE_POINTS: usize = 100_000;
const FZ_TOL: f64 = 1e-12;
const DET_TOL: f64 = 1e-8;
const GAMMA_CIRCLE: f64 = 0.05;
const GAMMA_INTERIOR: f64 = 0.2;
const INTERIOR_RADIUS: f64 = 0.05;
const SYM_QUOTIENT: f64 = 8.0 / 3.0;
const SYM_REL_TOL: f64 = 0.1;

#[test]
fn criterion_05_counterexample_bundle() {
    let _g = serial();
    let b = shared_counterexample().unwrap();
    let g_one = profile(1.0);
    let top = CUTOFF_END + 0.5;
    let (mut ratio, mut slope): (f64, f64) = (0.0, 0.0);
    for k in 0..PROFILE_POINTS {
        let r = top * (k as f64 + 0.5) / PROFILE_POINTS as f64;
        if r != 1.0 {
            ratio = ratio.max(profile(r).abs() / r);
            slope = slope.max(profile_slope(r).abs() / 3.0);
        }
    }
    let fz = (0..360).map(|k| (b.f_z(PlaneVec::polar(1.0, TAU * k as f64 / 360.0)).norm() - 1.0).abs()).fold(0.0, f64::max);
    let det = (0..36)
        .map(|k| {
            let t = TAU * k as f64 / 36.0 + 0.01;
            (b.det_grad_f_fd(PlaneVec::polar(1.0, t), 1e-3) - (-(2.0 * t).sin().powi(2) / 3.0)).abs()
        })
        .fold(0.0, f64::max);
    let scales = [1e-2, 1e-3, 1e-4];
    let mut circle: f64 = 0.0;
    for t in off_grid_angles(24) {
        let scan = gamma_classify(&b.h, PlaneVec::polar(1.0, t), &scales, OffsetPattern::CircleChords(16)).unwrap();
        let last = scan.levels.last().unwrap();
        circle = circle.max(last.min_gamma_plus.max(last.min_gamma_minus));
    }
    let mut interior = f64::INFINITY;
    for base in [PlaneVec::ZERO, PlaneVec::polar(0.02, 1.0), PlaneVec::polar(INTERIOR_RADIUS, 2.0), PlaneVec::polar(INTERIOR_RADIUS, 4.5)] {
        for l in gamma_classify(&b.h, base, &scales, OffsetPattern::CircleChords(16)).unwrap().levels {
            interior = interior.min(l.min_gamma_plus.min(l.min_gamma_minus));
        }
    }
    let sym = counterexample_stilde_audit(b, &[PI / 3.0], 1e-4, 64).rows[0].max_sym_quotient;
    let sym_rel = (sym - SYM_QUOTIENT).abs() / SYM_QUOTIENT;
    let pass = g_one == 1.0
        && ratio < 1.0
        && slope < 1.0
        && fz <= FZ_TOL
        && det <= DET_TOL
        && circle < GAMMA_CIRCLE
        && interior > GAMMA_INTERIOR
        && sym_rel < SYM_REL_TOL;
    assert!(verdict(
        5,
        pass,
        format!(
            "g(1) = {g_one}; 1 − max |g|/r = {:.1e}, max |g'|/3 {slope:.4}; ||f_z|-1| {fz:.1e}; det error {det:.1e}; circle Γ± {circle:.2e} (< {GAMMA_CIRCLE}); interior Γ± {interior:.3} (> {GAMMA_INTERIOR}); symmetric quotient {sym:.4} vs 8/3 ({:.1}%)",
            1.0 - ratio,
            100.0 * sym_rel
        )
    ));
}

// 6. Solver exactness and rates.
const AFFINE_TOL: f64 = 1e-10;
const HARMONIC_ORDER: f64 = 1.8;
const SOLVER_BUDGET_S: f64 = 180.0;

#[test]
fn criterion_06_solver_exactness_and_rates() {
    let _g = serial();
    let start = Instant::now();
    let c16 = ctx(16.0);
    let mut affine_err: f64 = 0.0;
    let (a, bb, c) = (0.7, -0.4, 0.25);
    for spec in FieldSpec::catalog() {
        let f = MonotoneField::from_spec(&spec).unwrap();
        let (u, _) = c16.solve(&f, &|t: f64| c + a * t.cos() + bb * t.sin(), &SolveOptions::default()).unwrap();
        for (p, v) in c16.domain().nodes.iter().zip(&u.values) {
            affine_err = affine_err.max((v - (c + a * p.x + bb * p.y)).abs());
        }
    }
    let id = field("identity");
    let l2: Vec<f64> = [8.0, 16.0, 32.0].iter().map(|&n| ctx(n).solve(&id, &harmonic_boundary, &SolveOptions::default()).unwrap().0.l2_error(harmonic_exact)).collect();
    let order = (l2[0] / l2[2]).log2() / 2.0;
    let b = shared_counterexample().unwrap();
    let h1: Vec<f64> = [16.0, 32.0, 64.0]
        .iter()
        .map(|&n| {
            let (u, _) = ctx(n).solve(&b.g_field, &counterexample_boundary, &SolveOptions::default()).unwrap();
            u.h1_seminorm_error(|p| b.grad_u(p), 1.0)
        })
        .collect();
    let secs = start.elapsed().as_secs_f64();
    let pass = affine_err <= AFFINE_TOL && order >= HARMONIC_ORDER && decreasing(&h1) && secs < SOLVER_BUDGET_S;
    assert!(verdict(
        6,
        pass,
        format!("affine error {affine_err:.1e} (tol {AFFINE_TOL:e}); harmonic L2 errors {}, order {order:.3} (>= {HARMONIC_ORDER}); counterexample H1 errors {h1:.4?}; {secs:.1} s (< {SOLVER_BUDGET_S} s)", sci(&l2))
    ));
}

// 7. Conjugate consistency.
const DUAL_RESIDUAL_FACTOR: f64 = 3.0;

#[test]
fn criterion_07_conjugate_consistency() {
    let _g = serial();
    let mut lines = Vec::new();
    let mut pass = true;
    for (name, f, boundary) in [("harmonic", field("identity"), harmonic_boundary as fn(f64) -> f64), ("mollified p=4", p4_mollified(), p4_boundary)] {
        let dual = dual_field(&f).unwrap();
        let mut curls = Vec::new();
        let mut ratios = Vec::new();
        for n in [8.0, 16.0, 32.0] {
            let c = ctx(n);
            let (u, _) = c.solve(&f, &boundary, &SolveOptions::default()).unwrap();
            let (_, _, rep) = conjugate_report(&c, &f, &dual, &u);
            curls.push(rep.curl_defect);
            ratios.push(rep.dual_residual / rep.primal_residual.max(1e-13));
        }
        pass &= decreasing(&curls) && ratios.iter().all(|r| *r <= DUAL_RESIDUAL_FACTOR);
        lines.push(format!("{name}: curl defects {}, dual/primal residual {}", sci(&curls), sci(&ratios)));
    }
    assert!(verdict(7, pass, format!("{} (factor <= {DUAL_RESIDUAL_FACTOR})", lines.join("; "))));
}

// 8. Caccioppoli ratios.
const CALIBRATION_TOL: f64 = 0.15;
const DRIFT_TOL: f64 = 0.10;
const P4_LAMBDA: f64 = 0.5;

#[test]
fn criterion_08_cacciopoli_ratios() {
    let _g = serial();
    // For u = x² − y²: ∫_{B_1/2} |D²u|² = 8·π/4 and ∫_{B_1} |∇u|² = 2π, so the ratio is 1.
    let id = field("identity");
    let u = ctx(32.0).solve(&id, &harmonic_boundary, &SolveOptions::default()).unwrap().0;
    let id_prof = sample_ellipticity(&id, Rect::centered(3.0), 0.25, &[1.0, 0.1], 16).unwrap();
    let calibration = cacciopoli_ratio(&u, &id, Side::OLambda, 1.0, &id_prof).unwrap().ratio.unwrap();
    let f = p4_mollified();
    let prof = sample_ellipticity(&f, Rect::centered(3.0), 0.05, &[1.0, 0.3, 0.1, 0.03], 16).unwrap();
    let ratios: Vec<f64> = [8.0, 16.0, 32.0]
        .iter()
        .map(|&n| {
            let u = ctx(n).solve(&f, &p4_boundary, &SolveOptions::default()).unwrap().0;
            cacciopoli_ratio(&u, &f, Side::OLambda, P4_LAMBDA, &prof).unwrap().ratio.unwrap()
        })
        .collect();
    let drift = (ratios[2] - ratios[1]).abs() / ratios[1];
    let pass = (calibration - 1.0).abs() <= CALIBRATION_TOL && drift <= DRIFT_TOL;
    assert!(verdict(
        8,
        pass,
        format!("harmonic ratio {calibration:.4} (1 ± {CALIBRATION_TOL}); mollified p=4 O-side ratios {ratios:.5?}, drift {:.1}% (<= {}%)", 100.0 * drift, 100.0 * DRIFT_TOL)
    ));
}

// 9. Max/min principle.
const MAXMIN_FRACTION: f64 = 0.05;
const MAXMIN_RADIUS: f64 = 0.5;

#[test]
fn criterion_09_maxmin_principle() {
    let _g = serial();
    let c = ctx(32.0);
    let harmonic = c.solve(&field("identity"), &harmonic_boundary, &SolveOptions::default()).unwrap().0;
    let b = shared_counterexample().unwrap();
    let exact = GridFunction::interpolate(c.domain().clone(), |p| b.u(p));
    let opts = MaxMinOptions { max_fraction: MAXMIN_FRACTION, ..MaxMinOptions::default() };
    let mh = maxmin_check(&harmonic, MAXMIN_RADIUS, &opts).unwrap();
    let mc = maxmin_check(&exact, MAXMIN_RADIUS, &opts).unwrap();
    let pass = mh.violation_fraction < MAXMIN_FRACTION && mc.violation_fraction < MAXMIN_FRACTION;
    assert!(verdict(
        9,
        pass,
        format!(
            "violation fractions at h = 1/32: harmonic {:.3} ({}/{}), counterexample {:.3} ({}/{}) (< {MAXMIN_FRACTION})",
            mh.violation_fraction, mh.violations, mh.boundary_points, mc.violation_fraction, mc.violations, mc.boundary_points
        )
    ));
}

// 10. Linear Beltrami dichotomy.
const LINEAR_RESIDUAL: f64 = 1e-12;
const LINEAR_SAMPLES: usize = 20;

#[test]
fn criterion_10_linear_dichotomy() {
    let _g = serial();
    let zero = Complex64::new(0.0, 0.0);
    let constancy = [1.0, -1.0].iter().all(|s| {
        let v = linear_analyze(zero, Complex64::new(*s, 0.0)).unwrap();
        v.forces_constancy && v.counterexample.is_none()
    });
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut worst: f64 = 0.0;
    let mut missing = 0;
    for _ in 0..LINEAR_SAMPLES {
        let share = 0.05 + 0.9 * rng.random::<f64>();
        let mu = Complex64::from_polar(share, TAU * rng.random::<f64>());
        let nu = Complex64::from_polar(1.0 - share, TAU * rng.random::<f64>());
        let v = linear_analyze(mu, nu).unwrap();
        match (v.forces_constancy, v.counterexample, v.residual) {
            (false, Some(f), Some(r)) if f.u_nonconstant() && f.v_nonconstant() => worst = worst.max(r),
            _ => missing += 1,
        }
    }
    let pass = constancy && missing == 0 && worst <= LINEAR_RESIDUAL;
    assert!(verdict(10, pass, format!("(0, ±1) force constancy: {constancy}; {LINEAR_SAMPLES} other pairs: {missing} without counterexample, max residual {worst:.1e} (<= {LINEAR_RESIDUAL:e})")));
}

// 11. Certified radius.
/// `ln δ_final` for the identity certificate: M = 1, λ = Λ = 1, η = 0.1, unit norms,
/// floor 0.025, c0 = c_iter = 1, safety 1/2, so K = 100 and
/// `ln δ_final = 100·(−32π/0.025² − ln 2 + ln(1/2))`. Evaluated once outside this crate.
const GOLDEN_LN_DELTA_FINAL_BITS: u64 = 0xc16e_ae0c_a081_9040;
const GOLDEN_K: u64 = 100;

fn identity_certificate() -> CoveringCertificate {
    let p = sample_ellipticity(&field("identity"), Rect::centered(2.5), 0.1, &PROFILE_SCALES, 16).unwrap();
    build_covering(&p, 1.0, 0.2, 1.0, 1.0, &[]).unwrap()
}

fn nonincreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] <= w[0])
}

fn nondecreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] >= w[0])
}

#[test]
fn criterion_11_certified_radius() {
    let _g = serial();
    let cert = identity_certificate();
    let rc = certified_radius(&cert, &RadiusInputs::new(1.0, 1.0, 0.025)).unwrap();
    let golden = f64::from_bits(GOLDEN_LN_DELTA_FINAL_BITS);
    let bit_exact = rc.ln_delta_final.to_bits() == GOLDEN_LN_DELTA_FINAL_BITS && rc.k == GOLDEN_K;
    let sweep = [1.0, 1.5, 2.0, 3.0, 4.0];
    let ln = |cert: &CoveringCertificate, inputs: RadiusInputs| certified_radius(cert, &inputs).unwrap().ln_delta_final;
    let base = RadiusInputs::new(1.0, 1.0, 0.025);
    let by_eta: Vec<f64> = [0.05, 0.08, 0.1, 0.12, 0.15].iter().map(|&e| ln(&CoveringCertificate { eta: e, ..cert.clone() }, base)).collect();
    let by_grad: Vec<f64> = sweep.iter().map(|&s| ln(&cert, RadiusInputs { grad_l2: s, ..base })).collect();
    let by_flux: Vec<f64> = sweep.iter().map(|&s| ln(&cert, RadiusInputs { g_grad_l2: s, ..base })).collect();
    let by_c0: Vec<f64> = sweep.iter().map(|&s| ln(&cert, RadiusInputs { c0: s, ..base })).collect();
    let battery = nondecreasing(&by_eta) && by_eta[4] > by_eta[0] && nonincreasing(&by_grad) && nonincreasing(&by_flux) && nonincreasing(&by_c0) && by_c0[4] < by_c0[0];
    let pass = bit_exact && battery;
    assert!(verdict(
        11,
        pass,
        format!("ln δ_final {} vs golden {golden} (K = {}); sweeps η {}, ‖∇u‖ {}, ‖G(∇u)‖ {}, c0 {}", rc.ln_delta_final, rc.k, sci(&by_eta), sci(&by_grad), sci(&by_flux), sci(&by_c0))
    ));
}

// 12. Non-C¹ witness.
const WITNESS_DELTA: f64 = 0.05;
const WITNESS_FLOOR: f64 = 0.2;
/// `∇(x² − y²) = (2x, −2y)` maps `B_δ` onto a disc of diameter `4δ`.
const HARMONIC_SLOPE: f64 = 4.0;
const SLOPE_TOL: f64 = 0.15;
const LINEAR_FIT_R2: f64 = 0.99;

#[test]
fn criterion_12_non_c1_witness() {
    let _g = serial();
    let b = shared_counterexample().unwrap();
    let witness: Vec<f64> = [16.0, 32.0, 64.0]
        .iter()
        .map(|&n| {
            let (u, _) = ctx(n).solve(&b.g_field, &counterexample_boundary, &SolveOptions::default()).unwrap();
            gradient_image(&u, WITNESS_DELTA).unwrap().diameter
        })
        .collect();
    let harmonic = ctx(64.0).solve(&field("identity"), &harmonic_boundary, &SolveOptions::default()).unwrap().0;
    let deltas = [WITNESS_DELTA, 0.1, 0.2, 0.3, 0.4];
    let diams: Vec<f64> = deltas.iter().map(|&d| gradient_image(&harmonic, d).unwrap().diameter).collect();
    let n = deltas.len() as f64;
    let (mx, my) = (deltas.iter().sum::<f64>() / n, diams.iter().sum::<f64>() / n);
    let sxy: f64 = deltas.iter().zip(&diams).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = deltas.iter().map(|x| (x - mx) * (x - mx)).sum();
    let syy: f64 = diams.iter().map(|y| (y - my) * (y - my)).sum();
    let slope = sxy / sxx;
    let r2 = sxy * sxy / (sxx * syy);
    let pass = witness.iter().all(|d| *d > WITNESS_FLOOR) && (slope / HARMONIC_SLOPE - 1.0).abs() <= SLOPE_TOL && r2 >= LINEAR_FIT_R2;
    assert!(verdict(
        12,
        pass,
        format!(
            "counterexample diameters at δ = {WITNESS_DELTA} for h = 1/16, 1/32, 1/64: {witness:.3?} (> {WITNESS_FLOOR}); harmonic diameters {diams:.3?} at δ = {deltas:?}, slope {slope:.3} (4 ± {}%), R² {r2:.5}",
            100.0 * SLOPE_TOL
        )
    ));
}
