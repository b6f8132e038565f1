//! Property tests for the structural invariants of fields, transforms, classification and the solver.

use monoplane::beltrami::counterexample::shared_counterexample;
use monoplane::beltrami::{beltrami_quotient, linear_analyze, minty_backward, minty_forward, Correspondence, LipschitzMap};
use monoplane::classify::{build_covering, certified_radius, lipschitz_on_v, sample_ellipticity, CoveringCertificate, RadiusInputs};
use monoplane::diagnostics::{convex_hull, diameter, gradient_image};
use monoplane::duality::dual_field;
use monoplane::field::{cross_difference_asymmetry, monotonicity_gap, monotony_profile, quotients};
use monoplane::geom::Rect;
use monoplane::solver::{build_disc_mesh, solve_dirichlet, DiscDomain, GridFunction, SolveOptions};
use monoplane::{FieldSpec, MonotoneField, PlaneVec};
use num_complex::Complex64;
use proptest::prelude::*;
use std::sync::{Arc, OnceLock};

fn field(text: &str) -> MonotoneField {
    MonotoneField::from_spec(&text.parse::<FieldSpec>().unwrap()).unwrap()
}

fn catalog() -> &'static [MonotoneField] {
    static C: OnceLock<Vec<MonotoneField>> = OnceLock::new();
    C.get_or_init(|| FieldSpec::catalog().iter().map(|s| MonotoneField::from_spec(s).unwrap()).collect())
}

fn smooth_fields() -> &'static [(MonotoneField, MonotoneField)] {
    static C: OnceLock<Vec<(MonotoneField, MonotoneField)>> = OnceLock::new();
    C.get_or_init(|| {
        ["identity", "p_laplacian(p=4)", "p_laplacian(p=3)", "rotational_gm(m=0.3)", "mollify(g0_cubic, eps=0.2)"]
            .iter()
            .map(|t| {
                let f = field(t);
                let d = dual_field(&f).unwrap();
                (f, d)
            })
            .collect()
    })
}

fn point(r: f64) -> impl Strategy<Value = PlaneVec> {
    (0.0..1.0f64, 0.0..std::f64::consts::TAU).prop_map(move |(s, t)| PlaneVec::polar(r * s.sqrt(), t))
}

fn direction() -> impl Strategy<Value = PlaneVec> {
    (0.0..std::f64::consts::TAU).prop_map(|t| PlaneVec::polar(1.0, t))
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 256, ..ProptestConfig::default() })]

    #[test]
    fn catalog_fields_are_strictly_monotone(k in 0usize..8, a in point(5.0), b in point(5.0)) {
        prop_assume!(a.dist(b) > 1e-6);
        let f = &catalog()[k];
        prop_assert!(monotonicity_gap(f, a, b) > 0.0, "{} at {a:?}, {b:?}", f.label());
    }

    #[test]
    fn cauchy_schwarz_orders_the_quotients(k in 0usize..8, base in point(3.0), dir in direction(), s in -6.0..0.0f64) {
        let f = &catalog()[k];
        let (q_lower, q_upper_inv) = quotients(f, base, dir * 10f64.powf(s));
        prop_assume!(q_lower > 0.0);
        prop_assert!(q_upper_inv <= (1.0 / q_lower) * (1.0 + 1e-12), "{} {q_lower} {q_upper_inv}", f.label());
    }

    #[test]
    fn gradient_fields_have_first_order_symmetric_differences(k in 0usize..3, base in point(2.0), d1 in direction(), d2 in direction()) {
        let f = &[field("identity"), field("p_laplacian(p=4)"), field("p_laplacian(p=3)")][k];
        prop_assert!(f.is_gradient());
        let defect = |s: f64| cross_difference_asymmetry(f, base, d1 * s, d2 * s) / (s * s);
        let (coarse, fine) = (defect(1e-2), defect(1e-3));
        prop_assert!(fine <= 0.2 * coarse + 1e-7, "{coarse} {fine}");
    }

    #[test]
    fn duality_is_an_involution(k in 0usize..5, xi in point(2.0)) {
        prop_assume!(xi.norm() > 0.1);
        let (f, d) = &smooth_fields()[k];
        // -iG*(iG(ξ)) = ξ.
        let back = d.eval(f.eval(xi).rot()).rot_neg();
        prop_assert!((back - xi).norm() <= 1e-8 * (1.0 + xi.norm()), "{}: {back:?} vs {xi:?}", f.label());
        // iG(-iG*(ξ)) = ξ.
        let fwd = f.eval(d.eval(xi).rot_neg()).rot();
        prop_assert!((fwd - xi).norm() <= 1e-8 * (1.0 + xi.norm()), "{}: {fwd:?} vs {xi:?}", f.label());
    }

    #[test]
    fn duality_exchanges_upper_and_lower_quotients(k in 0usize..5, xi in point(2.0), dir in direction(), s in -3.0..-1.0f64) {
        let (f, d) = &smooth_fields()[k];
        let zeta = dir * 10f64.powf(s);
        let (_, q_upper_inv) = quotients(f, xi, zeta);
        prop_assume!(q_upper_inv.is_finite());
        let base = f.eval(xi).rot();
        let offset = f.eval(xi + zeta).rot() - base;
        let (q_lower_dual, _) = quotients(d, base, offset);
        prop_assert!((q_lower_dual - q_upper_inv).abs() <= 1e-6 * (1.0 + q_upper_inv.abs()), "{}: {q_lower_dual} vs {q_upper_inv}", f.label());
    }

    #[test]
    fn mollified_fields_are_strongly_monotone(a in point(2.0), b in point(2.0)) {
        prop_assume!(a.dist(b) > 1e-4);
        let f = &smooth_fields()[4].0;
        let gap = monotonicity_gap(f, a, b);
        prop_assert!(gap > 0.0);
        let c = (a.dist(b).powi(2) + (f.eval(a) - f.eval(b)).norm_sq()) / gap;
        prop_assert!(c.is_finite());
    }

    #[test]
    fn correspondence_identities_are_algebraic(a in point(0.6), b in point(0.6), z in point(3.0)) {
        prop_assume!(a.norm() + b.norm() < 0.99);
        let h = LipschitzMap::affine(a.to_complex(), b.to_complex(), Complex64::new(0.0, 0.0)).unwrap();
        let c = Correspondence::new(h.clone());
        let (f, fs) = (c.f(z), c.f_star(z));
        prop_assert!((f + fs.rot() - h.eval(z)).norm() <= 1e-14 * (1.0 + z.norm()));
        prop_assert!((f - fs.rot() - z.conj()).norm() <= 1e-14 * (1.0 + z.norm()));
    }

    #[test]
    fn accepted_data_are_strict_contractions(a in point(0.6), b in point(0.6), base in point(3.0), off in point(1.0)) {
        prop_assume!(a.norm() + b.norm() < 0.99 && off.norm() > 1e-9);
        let h = LipschitzMap::affine(a.to_complex(), b.to_complex(), Complex64::new(0.0, 0.0)).unwrap();
        prop_assert!(beltrami_quotient(&h, base, off).unwrap().l.norm() < 1.0);
    }

    #[test]
    fn counterexample_solution_closed_form(z in point(1.0)) {
        let b = shared_counterexample().unwrap();
        let (r, t) = (z.norm(), z.arg());
        prop_assert!((b.u(z) + r / 3.0 * (2.0 * t).sin()).abs() <= 1e-14);
        prop_assert!((b.u(z) - 0.5 * b.f(z).x).abs() <= 1e-14);
        prop_assert!((b.v(z) - 0.5 * b.f(z).y).abs() <= 1e-14);
    }

    #[test]
    fn linear_dichotomy_on_the_unit_sum(t in 0.0..1.0f64, am in 0.0..std::f64::consts::TAU, an in 0.0..std::f64::consts::TAU) {
        let mu = Complex64::from_polar(t, am);
        let nu = Complex64::from_polar(1.0 - t, an);
        let v = linear_analyze(mu, nu).unwrap();
        if let Some(r) = v.residual {
            prop_assert!(r <= 1e-12);
        }
        prop_assert!(v.forces_constancy != v.counterexample.is_some());
    }

    #[test]
    fn hull_diameter_matches_brute_force(pts in prop::collection::vec(point(3.0), 1..60)) {
        let brute = pts.iter().flat_map(|p| pts.iter().map(move |q| p.dist(*q))).fold(0.0, f64::max);
        prop_assert!((diameter(&pts) - brute).abs() <= 1e-12);
        let hull = convex_hull(&pts);
        for p in &pts {
            prop_assert!(hull.contains(p) || hull.len() < 3 || inside(&hull, *p));
        }
    }
}

fn inside(hull: &[PlaneVec], p: PlaneVec) -> bool {
    (0..hull.len()).all(|k| (hull[(k + 1) % hull.len()] - hull[k]).cross(p - hull[k]) >= -1e-12)
}

fn profile_fields() -> &'static [MonotoneField] {
    static C: OnceLock<Vec<MonotoneField>> = OnceLock::new();
    C.get_or_init(|| ["identity", "p_laplacian(p=4)", "p_laplacian(p=1.5)", "rotational_gm(m=0.5)", "g0_cubic"].iter().map(|t| field(t)).collect())
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, ..ProptestConfig::default() })]

    #[test]
    fn profile_cells_are_ordered(k in 0usize..5, cx in -1.0..1.0f64, cy in -1.0..1.0f64, half in 0.1..0.6f64) {
        let f = &profile_fields()[k];
        let bounds = Rect::new(cx - half, cx + half, cy - half, cy + half);
        let p = sample_ellipticity(f, bounds, half / 3.0, &[1.0, 0.1, 0.01], 16).unwrap();
        for c in &p.cells {
            prop_assert!(c.lambda_hat <= c.upper_hat * (1.0 + 1e-12), "{} at {:?}", f.label(), c.center);
        }
    }

    #[test]
    fn lipschitz_bound_holds_on_v_regions(k in 0usize..2, upper in 1.5..4.0f64) {
        let f = &[field("rotational_gm(m=0.3)"), field("identity")][k];
        let p = sample_ellipticity(f, Rect::centered(1.0), 0.25, &[1.0, 0.1, 0.01], 16).unwrap();
        prop_assert!(lipschitz_on_v(f, &p, upper, 0.05) <= 1.0);
    }

    #[test]
    fn modulus_profile_is_nondecreasing_in_t(k in 0usize..3, lo in 0.05..0.5f64, span in 0.1..1.5f64, seed in 0u64..1000) {
        let f = &profile_fields()[k];
        let ts: Vec<f64> = (0..5).map(|i| lo + span * i as f64 / 4.0).collect();
        let est = monotony_profile(f, &ts, 2.0, 2000, seed).unwrap();
        for w in est.windows(2) {
            prop_assert!(w[0].value <= w[1].value, "{} {:?}", f.label(), est.iter().map(|e| e.value).collect::<Vec<_>>());
        }
    }
}

fn base_covering() -> &'static CoveringCertificate {
    static C: OnceLock<CoveringCertificate> = OnceLock::new();
    C.get_or_init(|| {
        let p = sample_ellipticity(&field("identity"), Rect::centered(2.5), 0.1, &[1.0, 0.1, 0.01], 16).unwrap();
        build_covering(&p, 1.0, 0.2, 1.0, 1.0, &[]).unwrap()
    })
}

fn ln_delta(cert: &CoveringCertificate, inputs: &RadiusInputs) -> f64 {
    certified_radius(cert, inputs).unwrap().ln_delta_final
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 256, ..ProptestConfig::default() })]

    #[test]
    fn certified_radius_is_monotone(
        grad in 0.1..3.0f64,
        ggrad in 0.1..3.0f64,
        floor in 0.01..1.0f64,
        c0 in 0.5..2.0f64,
        lambda in 0.2..1.0f64,
        upper in 1.0..3.0f64,
        eta in 0.02..0.15f64,
        bump in 1.01..2.0f64,
    ) {
        let mut cert = base_covering().clone();
        cert.lambda = lambda;
        cert.upper = upper;
        cert.eta = eta;
        let inputs = RadiusInputs { c0, ..RadiusInputs::new(grad, ggrad, floor) };
        let base = ln_delta(&cert, &inputs);
        let with = |f: &dyn Fn(&mut CoveringCertificate, &mut RadiusInputs)| {
            let (mut c, mut i) = (cert.clone(), inputs);
            f(&mut c, &mut i);
            ln_delta(&c, &i)
        };
        prop_assert!(with(&|c, _| c.eta *= bump) >= base);
        prop_assert!(with(&|_, i| i.monotony_floor *= bump) >= base);
        prop_assert!(with(&|_, i| i.c0 *= bump) <= base);
        prop_assert!(with(&|c, _| c.lambda /= bump) <= base);
        prop_assert!(with(&|c, _| c.upper *= bump) <= base);
        prop_assert!(with(&|_, i| i.grad_l2 *= bump) <= base);
        prop_assert!(with(&|_, i| i.g_grad_l2 *= bump) <= base);
    }
}

fn coarse_domain() -> Arc<DiscDomain> {
    static D: OnceLock<Arc<DiscDomain>> = OnceLock::new();
    D.get_or_init(|| Arc::new(build_disc_mesh(0.25).unwrap())).clone()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 16, ..ProptestConfig::default() })]

    #[test]
    fn affine_data_are_reproduced(k in 0usize..5, c in -1.0..1.0f64, a in point(1.5)) {
        let specs = ["identity", "p_laplacian(p=4)", "p_laplacian(p=1.5)", "rotational_gm(m=0.5)", "g0_cubic"];
        let f = field(specs[k]);
        prop_assume!(a.norm() > 0.05 || k == 0);
        let d = coarse_domain();
        let exact = |p: PlaneVec| c + a.dot(p);
        let (u, rep) = solve_dirichlet(&f, d, &|t: f64| exact(PlaneVec::polar(1.0, t)), &SolveOptions::with_tol(1e-12)).unwrap();
        prop_assert!(rep.converged);
        for (p, v) in u.domain.nodes.iter().zip(&u.values) {
            prop_assert!((v - exact(*p)).abs() <= 1e-10, "{} at {p:?}", f.label());
        }
    }

    #[test]
    fn gradient_images_shrink_with_the_ball(d1 in 0.1..1.0f64, d2 in 0.1..1.0f64) {
        let b = shared_counterexample().unwrap();
        let u = GridFunction::interpolate(coarse_domain(), |p| b.u(p));
        let (small, large) = (d1.min(d2), d1.max(d2));
        let (gs, gl) = (gradient_image(&u, small).unwrap(), gradient_image(&u, large).unwrap());
        prop_assert!(gs.diameter <= gl.diameter + 1e-15);
    }

    #[test]
    fn minty_round_trip_on_random_points(k in 0usize..3, xi in point(2.0)) {
        let f = &[field("identity"), field("p_laplacian(p=3)"), field("rotational_gm(m=0.3)")][k];
        let fw = minty_forward(f).unwrap();
        let back = minty_backward(&fw.h, f.spec().clone()).unwrap();
        prop_assert!((back.g.eval(xi) - f.eval(xi)).norm() <= 1e-8 * (1.0 + f.eval(xi).norm()));
    }
}
