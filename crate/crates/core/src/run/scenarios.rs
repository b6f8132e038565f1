//! One function per scenario; each writes into the bundle and records audits.

use super::config::{RunConfig, Scenario};
use super::svg;
use super::Bundle;
use crate::beltrami::counterexample::{audit_bundle, shared_counterexample};
use crate::beltrami::{audit_lipschitz, minty_backward, minty_forward, LipschitzSpec};
use crate::classify::{build_covering, certified_radius, detect_bad_set, sample_ellipticity, stilde_inclusion_audit, EllipticityProfile, RadiusInputs};
use crate::diagnostics::{cacciopoli_ratio, gradient_image, localization_probe, maxmin_check, MaxMinOptions};
use crate::duality::dual_field;
use crate::error::{Error, Result};
use crate::field::{monotonicity_audit, monotony_floor, FieldSpec, MonotoneField};
use crate::geom::{PlaneVec, Rect};
use crate::solver::conjugate::conjugate_report;
use crate::solver::{build_disc_mesh, GridFunction, SolveOptions, SolveReport, SolverContext};
use serde_json::json;
use std::sync::Arc;

pub(super) fn dispatch(cfg: &RunConfig, b: &mut Bundle) -> Result<()> {
    match cfg.scenario {
        Scenario::Catalog => catalog(cfg, b),
        Scenario::Classify => classify(cfg, b),
        Scenario::Transform => transform(cfg, b),
        Scenario::Solve => solve(cfg, b),
        Scenario::Diagnose => diagnose(cfg, b),
        Scenario::Counterexample => counterexample(cfg, b),
        Scenario::Certify => certify(cfg, b),
    }
}

fn field_of(cfg: &RunConfig) -> Result<MonotoneField> {
    let spec = cfg.field.as_ref().ok_or_else(|| Error::Config("no field configured".into()))?;
    MonotoneField::from_spec(spec)
}

fn fmt_e(v: f64) -> String {
    format!("{v:.17e}")
}

fn catalog(cfg: &RunConfig, b: &mut Bundle) -> Result<()> {
    let specs = match &cfg.field {
        Some(s) => vec![s.clone()],
        None => FieldSpec::catalog(),
    };
    let s = &cfg.sampling;
    let mut rows = Vec::new();
    let mut records = Vec::new();
    for spec in &specs {
        let field = MonotoneField::from_spec(spec)?;
        let audit = b.stage(&format!("monotonicity {}", spec.label()), |_| monotonicity_audit(&field, s.pairs, s.radius, cfg.seed))?;
        b.audit(
            format!("monotone {}", spec.label()),
            audit.pass,
            "strict monotonicity: <G(a) - G(b), a - b> > 0 on seeded pairs",
            format!("min gap {:.3e}, failures {}", audit.min_gap, audit.failures),
        );
        rows.push(format!("{},{},{},{},{}", spec.label(), audit.pairs, fmt_e(audit.min_gap), fmt_e(audit.min_normalized_gap), audit.failures));
        records.push(json!({ "field": spec.label(), "gradient": field.is_gradient(), "note": field.smoothness_note(), "audit": audit }));
    }
    b.write_json("catalog.json", &records)?;
    if cfg.format.csv {
        b.write_csv("catalog.csv", "field,pairs,min_gap,min_normalized_gap,failures", rows)?;
    }
    b.summarize("fields", specs.len());
    Ok(())
}

/// Grid points of `[-2, 2]²` with `0.1 ≤ |ξ| ≤ 2`, row-major.
fn annulus_grid(n: usize) -> (Rect, Vec<Option<PlaneVec>>) {
    let bounds = Rect::centered(2.0);
    let pts = (0..n * n)
        .map(|k| {
            let (i, j) = (k % n, k / n);
            let p = PlaneVec::new(-2.0 + 4.0 * i as f64 / (n - 1) as f64, -2.0 + 4.0 * j as f64 / (n - 1) as f64);
            (p.norm() >= 0.1 && p.norm() <= 2.0).then_some(p)
        })
        .collect();
    (bounds, pts)
}

fn max_error(errs: &[Option<f64>]) -> f64 {
    errs.iter().flatten().copied().fold(0.0, f64::max)
}

fn transform(cfg: &RunConfig, b: &mut Bundle) -> Result<()> {
    const N: usize = 41;
    let (bounds, grid) = annulus_grid(N);
    let s = &cfg.sampling;
    if let Some(spec) = &cfg.field {
        let field = MonotoneField::from_spec(spec)?;
        let dual = b.stage("dual", |_| dual_field(&field))?;
        // G*(iG(ξ)) = iξ.
        let dual_err: Vec<Option<f64>> = grid.iter().map(|p| p.map(|p| (dual.eval(field.eval(p).rot()) - p.rot()).norm())).collect();
        let forward = b.stage("minty forward", |_| minty_forward(&field))?;
        let back = b.stage("minty backward", |_| minty_backward(&forward.h, spec.clone()))?;
        let minty_err: Vec<Option<f64>> = grid.iter().map(|p| p.map(|p| (back.g.eval(p) - field.eval(p)).norm())).collect();
        let lip = b.stage("lipschitz audit", |_| audit_lipschitz(&*forward.h.map(), s.radius, s.pairs.min(20_000), cfg.seed));
        let (de, me) = (max_error(&dual_err), max_error(&minty_err));
        b.audit("dual round trip", de <= 1e-8, "the dual of the dual is the field: -iG*(iG(x)) = x", format!("max error {de:.3e}"));
        b.audit("minty round trip", me <= 1e-6, "field to Beltrami datum and back reproduces the field", format!("max error {me:.3e}"));
        match &lip {
            Ok(a) => b.audit("H strictly 1-Lipschitz", true, "the Beltrami datum is a strict contraction", format!("max ratio {:.6}", a.max_ratio)),
            Err(e) => b.audit("H strictly 1-Lipschitz", false, "the Beltrami datum is a strict contraction", e.to_string()),
        }
        if cfg.format.csv {
            let rows = grid.iter().zip(dual_err.iter().zip(&minty_err)).filter_map(|(p, (d, m))| {
                p.map(|p| format!("{},{},{},{}", fmt_e(p.x), fmt_e(p.y), fmt_e(d.unwrap_or(f64::NAN)), fmt_e(m.unwrap_or(f64::NAN))))
            });
            b.write_csv("roundtrip.csv", "x,y,dual_error,minty_error", rows)?;
        }
        if cfg.format.svg {
            let vals: Vec<f64> = dual_err.iter().map(|e| e.map_or(f64::NAN, |e| (e + 1e-300).log10())).collect();
            b.write("dual_error.svg", svg::heatmap(bounds, N, N, &vals, "log10 dual round-trip error").as_bytes())?;
            let vals: Vec<f64> = minty_err.iter().map(|e| e.map_or(f64::NAN, |e| (e + 1e-300).log10())).collect();
            b.write("minty_error.svg", svg::heatmap(bounds, N, N, &vals, "log10 Minty round-trip error").as_bytes())?;
        }
        b.summarize("field", spec.label());
        b.summarize("dual_max_error", de);
        b.summarize("minty_max_error", me);
        if let Ok(a) = lip {
            b.summarize("H_max_ratio", a.max_ratio);
        }
    } else if let Some(hspec) = &cfg.beltrami {
        let h = hspec.build()?;
        let lip = b.stage("lipschitz audit", |_| audit_lipschitz(&*h.map(), s.radius, s.pairs.min(20_000), cfg.seed))?;
        let label = match hspec {
            LipschitzSpec::Minty(f) => f.clone(),
            LipschitzSpec::ExplicitS6 => FieldSpec::CounterexampleS6,
            LipschitzSpec::Zero | LipschitzSpec::Affine { .. } => FieldSpec::Identity,
        };
        let back = b.stage("minty backward", |_| minty_backward(&h, label))?;
        let mono = b.stage("monotonicity", |_| monotonicity_audit(&back.g, s.pairs.min(20_000), s.radius.min(2.0), cfg.seed))?;
        b.audit("G monotone", mono.pass, "the field built from a contraction is strictly monotone", format!("min gap {:.3e}", mono.min_gap));
        let values: Vec<Option<PlaneVec>> = grid.iter().map(|p| p.map(|p| back.g.eval(p))).collect();
        if cfg.format.csv {
            let rows = grid.iter().zip(&values).filter_map(|(p, v)| match (p, v) {
                (Some(p), Some(g)) => Some(format!("{},{},{},{}", fmt_e(p.x), fmt_e(p.y), fmt_e(g.x), fmt_e(g.y))),
                _ => None,
            });
            b.write_csv("field.csv", "x,y,gx,gy", rows)?;
        }
        if cfg.format.svg {
            let vals: Vec<f64> = values.iter().map(|v| v.map_or(f64::NAN, |g| g.norm())).collect();
            b.write("field_norm.svg", svg::heatmap(bounds, N, N, &vals, "|G| from the Beltrami datum").as_bytes())?;
        }
        b.summarize("beltrami", hspec.to_string());
        b.summarize("H_max_ratio", lip.max_ratio);
        b.summarize("min_gap", mono.min_gap);
    }
    Ok(())
}

fn log10_grid(profile: &EllipticityProfile, f: impl Fn(&crate::classify::CellRecord) -> f64) -> Vec<f64> {
    profile.cells.iter().map(|c| f(c).max(1e-300).log10()).collect()
}

fn write_profile(cfg: &RunConfig, b: &mut Bundle, profile: &EllipticityProfile) -> Result<()> {
    if cfg.format.csv {
        let mut header = String::from("x,y,lambda_hat,Lambda_hat");
        for s in &profile.scales {
            header.push_str(&format!(",lambda_{s:e},Lambda_{s:e}"));
        }
        let rows = profile.cells.iter().map(|c| {
            let mut r = format!("{},{},{},{}", fmt_e(c.center.x), fmt_e(c.center.y), fmt_e(c.lambda_hat), fmt_e(c.upper_hat));
            for s in &c.per_scale {
                r.push_str(&format!(",{},{}", fmt_e(s.lambda_hat), fmt_e(s.upper_hat)));
            }
            r
        });
        b.write_csv("profile.csv", &header, rows)?;
    }
    if cfg.format.svg {
        let lo = log10_grid(profile, |c| c.lambda_hat);
        b.write("lambda_hat.svg", svg::heatmap(profile.bounds, profile.nx, profile.ny, &lo, "log10 lambda_hat").as_bytes())?;
        let hi = log10_grid(profile, |c| c.upper_hat);
        b.write("Lambda_hat.svg", svg::heatmap(profile.bounds, profile.nx, profile.ny, &hi, "log10 Lambda_hat").as_bytes())?;
    }
    Ok(())
}

fn classify(cfg: &RunConfig, b: &mut Bundle) -> Result<()> {
    let field = field_of(cfg)?;
    let s = &cfg.sampling;
    let bounds = Rect::centered(s.box_half);
    let profile = b.stage("profile", |_| sample_ellipticity(&field, bounds, s.step, &s.scales, s.directions))?;
    write_profile(cfg, b, &profile)?;
    b.audit("scale ordering", profile.ordering_holds(), "lambda_hat <= Lambda_hat at every sampled point", "");
    let t = &cfg.thresholds;
    if let (Some(lambda), Some(upper)) = (t.lambda, t.upper) {
        let bad = b.stage("bad set", |_| detect_bad_set(&profile, lambda, upper))?;
        b.write_json("badset.json", &bad)?;
        b.summarize("bad_components", bad.components.len());
        b.summarize("bad_centers", bad.centers().iter().map(|c| [c.x, c.y]).collect::<Vec<_>>());
    }
    let inclusion = b.stage("inclusion", |_| stilde_inclusion_audit(&field, bounds, s.step, &s.scales, s.directions))?;
    b.audit(
        "S-tilde inside S",
        inclusion.violations.is_empty(),
        "blow-up of the lower quotient's upper side implies blow-up of the upper quotient",
        format!("{} violations", inclusion.violations.len()),
    );
    b.write_json("inclusion.json", &json!({
        "scales": inclusion.scales,
        "blowup_ratio": inclusion.blowup_ratio,
        "violations": inclusion.violations,
        "stilde_flags": inclusion.stilde_flags,
        "s_flags": inclusion.s_flags,
    }))?;
    let center = profile.lookup(PlaneVec::ZERO).cloned();
    b.summarize("field", field.label());
    if let Some(c) = center {
        b.summarize("lambda_hat_at_origin", c.lambda_hat);
        b.summarize("Lambda_hat_at_origin", c.upper_hat);
    }
    Ok(())
}

struct Solved {
    ctx: SolverContext,
    u: GridFunction,
    report: SolveReport,
}

fn solve_field(cfg: &RunConfig, b: &mut Bundle, field: &MonotoneField) -> Result<Solved> {
    let domain = Arc::new(b.stage("mesh", |_| build_disc_mesh(cfg.mesh.h))?);
    let ctx = SolverContext::new(domain)?;
    let opts = SolveOptions {
        tol: cfg.solver.tol,
        max_newton: cfg.solver.max_newton,
        continuation: cfg.solver.continuation.clone(),
        ..Default::default()
    };
    let boundary = |theta: f64| cfg.boundary.eval(theta);
    let (u, report) = b.stage("solve", |_| Ok(ctx.solve_partial(field, &boundary, &opts)))?;
    b.summarize("residual", report.residual_norm);
    b.summarize("iterations", report.iterations);
    b.summarize("lipschitz_estimate", report.lipschitz_estimate);
    b.summarize("converged", report.converged);
    Ok(Solved { ctx, u, report })
}

fn require_converged(report: &SolveReport) -> Result<()> {
    if report.converged {
        Ok(())
    } else {
        Err(Error::SolveFailed { message: format!("residual {:.3e} above tolerance {:.1e}", report.residual_norm, report.tol), history: report.history.clone() })
    }
}

fn solve(cfg: &RunConfig, b: &mut Bundle) -> Result<()> {
    let field = field_of(cfg)?;
    let Solved { ctx, u, report } = solve_field(cfg, b, &field)?;
    let domain = ctx.domain().clone();
    let mut header = json!({
        "field": field.label(),
        "mesh": { "h": cfg.mesh.h, "nodes": domain.nodes.len(), "triangles": domain.triangles.len(), "hash": domain.hash(), "quality": domain.quality() },
        "tolerance": cfg.solver.tol,
        "report": report,
    });
    if cfg.format.csv {
        b.write_csv("nodes.csv", "x,y,u", domain.nodes.iter().zip(&u.values).map(|(p, v)| format!("{},{},{}", fmt_e(p.x), fmt_e(p.y), fmt_e(*v))))?;
        let rows = domain.triangles.iter().zip(&u.gradients).map(|(t, g)| format!("{},{},{},{},{}", t[0], t[1], t[2], fmt_e(g.x), fmt_e(g.y)));
        b.write_csv("gradients.csv", "n0,n1,n2,ux,uy", rows)?;
    }
    if cfg.format.svg {
        b.write("contour.svg", svg::contour(&domain, &u.values, 12, &format!("u for {}", field.label())).as_bytes())?;
    }
    require_converged(&report)?;
    if cfg.solver.conjugate {
        let dual = b.stage("dual", |_| dual_field(&field))?;
        let (c, w, rep) = b.stage("conjugate", |_| Ok(conjugate_report(&ctx, &field, &dual, &u)))?;
        b.audit(
            "conjugate dual residual",
            rep.dual_residual <= 3.0 * rep.primal_residual.max(1e-13),
            "the conjugate solves the dual equation as well as u solves the primal one",
            format!("dual {:.3e}, primal {:.3e}", rep.dual_residual, rep.primal_residual),
        );
        b.summarize("curl_defect", c.curl_defect);
        header["conjugate"] = serde_json::to_value(&rep).unwrap_or_default();
        if cfg.format.csv {
            b.write_csv("conjugate.csv", "x,y,v_least_squares,v", domain.nodes.iter().zip(c.v.values.iter().zip(&w.values)).map(|(p, (a, v))| format!("{},{},{},{}", fmt_e(p.x), fmt_e(p.y), fmt_e(*a), fmt_e(*v))))?;
        }
    }
    b.write_json("solution.json", &header)?;
    Ok(())
}

/// Square box around the gradient cloud, padded by `pad`.
fn gradient_box(u: &GridFunction, pad: f64) -> Rect {
    let m = u.gradients.iter().map(|g| g.x.abs().max(g.y.abs())).fold(0.0, f64::max);
    Rect::centered(m + pad)
}

fn diagnose(cfg: &RunConfig, b: &mut Bundle) -> Result<()> {
    let field = field_of(cfg)?;
    let Solved { u, report, .. } = solve_field(cfg, b, &field)?;
    require_converged(&report)?;
    let d = &cfg.diagnose;
    let images = b.stage("gradient images", |_| d.deltas.iter().map(|&delta| gradient_image(&u, delta)).collect::<Result<Vec<_>>>())?;
    let diam: Vec<_> = images.iter().map(|g| json!({ "delta": g.radius, "diameter": g.diameter, "points": g.points.len() })).collect();
    b.summarize("diameters", images.iter().map(|g| [g.radius, g.diameter]).collect::<Vec<_>>());

    let opts = MaxMinOptions { alpha_factor: d.alpha_factor, band_factor: d.band_factor, max_fraction: d.maxmin_fraction };
    let mm = b.stage("max/min", |_| maxmin_check(&u, d.maxmin_r, &opts))?;
    b.audit("max/min principle", mm.pass, "gradient cloud boundary is attained on the boundary of the ball", format!("violation fraction {:.4}", mm.violation_fraction));

    let s = &cfg.sampling;
    let profile = b.stage("profile", |_| sample_ellipticity(&field, gradient_box(&u, s.step), s.step, &s.scales, s.directions))?;
    let cacc = b.stage("caccioppoli", |_| cacciopoli_ratio(&u, &field, d.side, d.threshold, &profile))?;
    b.summarize("caccioppoli_ratio", cacc.ratio);

    let xi0 = PlaneVec::new(d.xi0[0], d.xi0[1]);
    let loc = b.stage("localization", |_| localization_probe(&u, xi0, d.rho, &d.deltas))?;
    b.summarize("localization", loc.verdict);

    b.write_json("diagnostics.json", &json!({ "gradient_images": diam, "maxmin": mm, "caccioppoli": cacc, "localization": loc }))?;
    if cfg.format.csv {
        let rows = images.iter().flat_map(|g| g.points.iter().map(move |p| format!("{},{},{}", g.radius, fmt_e(p.x), fmt_e(p.y))));
        b.write_csv("gradient_images.csv", "delta,ux,uy", rows)?;
    }
    if cfg.format.svg {
        if let Some(g) = images.iter().min_by(|a, b| a.radius.total_cmp(&b.radius)) {
            let circles = [
                svg::Circle { center: xi0, radius: d.rho, color: "#c0392b" },
                svg::Circle { center: xi0, radius: 3.0 * d.rho, color: "#e67e22" },
                svg::Circle { center: xi0, radius: 4.0 * d.rho, color: "#27ae60" },
            ];
            b.write("gradient_image.svg", svg::scatter(&g.points, &circles, &format!("gradients over B_{}", g.radius)).as_bytes())?;
        }
    }
    Ok(())
}

fn counterexample(cfg: &RunConfig, b: &mut Bundle) -> Result<()> {
    let bundle = shared_counterexample()?;
    let audit = b.stage("audit", |_| audit_bundle(bundle))?;
    for r in &audit.rows {
        b.audit(r.name.clone(), r.pass, r.description.clone(), format!("value {:.3e}, threshold {:.3e}", r.value, r.threshold));
    }
    b.write_json("audit.json", &audit)?;
    if cfg.format.csv {
        b.write_csv("audit.csv", "name,value,threshold,pass", audit.rows.iter().map(|r| format!("{},{},{},{}", r.name, fmt_e(r.value), fmt_e(r.threshold), r.pass)))?;
    }
    b.summarize("pass", audit.pass);
    Ok(())
}

fn certify(cfg: &RunConfig, b: &mut Bundle) -> Result<()> {
    let field = field_of(cfg)?;
    let t = &cfg.thresholds;
    let missing = |n: &str| Error::Config(format!("certify needs thresholds.{n}"));
    let (lambda, upper) = (t.lambda.ok_or_else(|| missing("lambda"))?, t.upper.ok_or_else(|| missing("Lambda"))?);
    let (r, m) = (t.r.ok_or_else(|| missing("r"))?, t.m.ok_or_else(|| missing("M"))?);
    let s = &cfg.sampling;
    let bounds = Rect::centered(s.box_half.max(2.0 * m + s.step));
    let profile = b.stage("profile", |_| sample_ellipticity(&field, bounds, s.step, &s.scales, s.directions))?;
    write_profile(cfg, b, &profile)?;
    let c = &cfg.certify;
    let centers: Vec<PlaneVec> = if c.centers.is_empty() {
        detect_bad_set(&profile, lambda, upper)?.centers()
    } else {
        c.centers.iter().map(|p| PlaneVec::new(p[0], p[1])).collect()
    };
    let covering = b.stage("covering", |_| build_covering(&profile, m, r, lambda, upper, &centers))?;
    let eta = t.eta.unwrap_or(covering.eta);
    let floor = match c.floor {
        Some(f) => f,
        None => b.stage("monotony floor", |_| monotony_floor(&field, eta / 4.0, m + eta, c.floor_grid, 2.0 * m, c.floor_samples, cfg.seed))?,
    };
    let inputs = RadiusInputs { grad_l2: c.grad_l2, g_grad_l2: c.g_grad_l2, c0: c.c0, c_iter: c.c_iter, monotony_floor: floor, safety: c.safety };
    let radius = certified_radius(&covering, &inputs)?;
    b.audit("covering", true, "the closed ball of radius 2M is covered by the good sets and the bad balls", format!("Lebesgue number {:.4}", covering.eta));
    b.write_json("certificate.json", &json!({ "covering": covering, "inputs": inputs, "radius": radius }))?;
    b.summarize("eta", covering.eta);
    b.summarize("K", radius.k);
    b.summarize("ln_delta_final", radius.ln_delta_final);
    b.summarize("bad_centers", centers.iter().map(|p| [p.x, p.y]).collect::<Vec<_>>());
    Ok(())
}
