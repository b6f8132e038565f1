//! `g(x) = ∫_0^x |t| + |sin(1/t)| dt`, evaluated to about 1e-13 absolute accuracy.
//!
//! For `x > 0`, `g(x) = x²/2 + P(x)` with `P(x) = ∫_{1/x}^∞ |sin s| / s² ds`. The tail
//! is split at the breakpoints `s = kπ`; whole periods come from a cached table of
//! tails, the last partial period from a Gauss-Legendre rule.

use crate::quadrature::GaussRule;
use std::f64::consts::{FRAC_1_PI, PI};
use std::sync::OnceLock;

/// Number of cached period tails; beyond this an asymptotic series takes over.
const CACHED_PERIODS: usize = 4096;
const RULE_ORDER: usize = 24;

struct Tables {
    rule: GaussRule,
    /// `tails[k] = Σ_{j ≥ k} ∫_{jπ}^{(j+1)π} |sin s| / s² ds` for `1 ≤ k ≤ CACHED_PERIODS`.
    tails: Vec<f64>,
}

fn tables() -> &'static Tables {
    static TABLES: OnceLock<Tables> = OnceLock::new();
    TABLES.get_or_init(|| {
        let rule = GaussRule::new(RULE_ORDER);
        let mut tails = vec![0.0; CACHED_PERIODS + 1];
        tails[CACHED_PERIODS] = asymptotic_tail(CACHED_PERIODS as f64);
        for k in (1..CACHED_PERIODS).rev() {
            tails[k] = tails[k + 1] + period_integral(&rule, k as f64);
        }
        Tables { rule, tails }
    })
}

/// `∫_{kπ}^{(k+1)π} |sin s| / s² ds`.
fn period_integral(rule: &GaussRule, k: f64) -> f64 {
    let a = k * PI;
    rule.integrate(0.0, PI, |u| u.sin() / ((a + u) * (a + u)))
}

/// Moments `∫_0^π u^n sin u du`.
fn sine_moments() -> [f64; 5] {
    let p2 = PI * PI;
    [2.0, PI, p2 - 4.0, p2 * PI - 6.0 * PI, p2 * p2 - 12.0 * p2 + 48.0]
}

/// Hurwitz zeta `Σ_{j ≥ k} j^{-s}` by Euler-Maclaurin, accurate for large `k`.
fn hurwitz_zeta(s: f64, k: f64) -> f64 {
    let ks = k.powf(-s);
    k.powf(1.0 - s) / (s - 1.0) + 0.5 * ks + s * ks / (12.0 * k)
        - s * (s + 1.0) * (s + 2.0) * ks / (720.0 * k.powi(3))
        + s * (s + 1.0) * (s + 2.0) * (s + 3.0) * (s + 4.0) * ks / (30240.0 * k.powi(5))
}

/// Tail `Σ_{j ≥ k}` of period integrals from the expansion
/// `∫_0^π sin u / (a + u)² du = Σ_n (n + 1)(-1)^n m_n / a^{n+2}`.
fn asymptotic_tail(k: f64) -> f64 {
    let m = sine_moments();
    let mut acc = 0.0;
    for (n, mn) in m.iter().enumerate() {
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        let s = n as f64 + 2.0;
        acc += sign * (n as f64 + 1.0) * mn / PI.powf(s) * hurwitz_zeta(s, k);
    }
    acc
}

fn tail_from(k: f64) -> f64 {
    let t = tables();
    if k <= CACHED_PERIODS as f64 {
        t.tails[k as usize]
    } else {
        asymptotic_tail(k)
    }
}

/// `P(x) = ∫_0^x |sin(1/t)| dt` for `x > 0`.
fn oscillatory_part(x: f64) -> f64 {
    let t = tables();
    if x > FRAC_1_PI {
        // 1/t < π on (1/π, x], so the integrand is sin(1/t) > 0 and smooth.
        let mut acc = t.tails[1];
        let mut a = FRAC_1_PI;
        while a < x {
            let b = (2.0 * a).min(x);
            acc += t.rule.integrate(a, b, |s| (1.0 / s).sin());
            a = b;
        }
        return acc;
    }
    let big = 1.0 / x;
    if big > 1e12 {
        // The average of |sin| is 2/π; the correction is O(x²).
        return 2.0 * FRAC_1_PI * x;
    }
    let k0 = (big / PI).ceil();
    let base = (k0 - 1.0) * PI;
    let lo = big - base;
    let partial = if lo < PI {
        t.rule.integrate(lo, PI, |u| u.sin() / ((base + u) * (base + u)))
    } else {
        0.0
    };
    partial + tail_from(k0)
}

/// The odd primitive `g(x) = ∫_0^x |t| + |sin(1/t)| dt`.
pub fn primitive(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return 0.0;
    }
    let ax = x.abs();
    let val = 0.5 * ax * ax + oscillatory_part(ax);
    val.copysign(x)
}

/// `g'(x) = |x| + |sin(1/x)|`, with the mean slope `2/π` at the origin.
pub fn derivative(x: f64) -> f64 {
    if x == 0.0 {
        2.0 * FRAC_1_PI
    } else {
        x.abs() + (1.0 / x).sin().abs()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Composite Simpson with `n` panels.
    fn simpson(a: f64, b: f64, n: usize, f: impl Fn(f64) -> f64) -> f64 {
        let h = (b - a) / n as f64;
        let mut acc = f(a) + f(b);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            acc += w * f(a + i as f64 * h);
        }
        acc * h / 3.0
    }

    fn integrand(t: f64) -> f64 {
        t.abs() + (1.0 / t).sin().abs()
    }

    #[test]
    fn increments_match_brute_force_quadrature() {
        // Split at the kinks 1/(kπ) so Simpson sees smooth pieces.
        let mut points = vec![0.1];
        for k in (1..=3).rev() {
            points.push(1.0 / (k as f64 * PI));
        }
        points.push(0.5);
        points.push(2.0);
        let mut brute = 0.0;
        for w in points.windows(2) {
            brute += simpson(w[0], w[1], 200_000, integrand);
        }
        let got = primitive(2.0) - primitive(0.1);
        assert!((got - brute).abs() < 1e-11, "got {got}, brute {brute}");
    }

    #[test]
    fn small_argument_behaves_like_mean_slope() {
        for x in [1e-3, 1e-5, 1e-8] {
            let ratio = primitive(x) / x;
            assert!((ratio - 2.0 / PI).abs() < 2.0 * x, "x = {x}, ratio = {ratio}");
        }
    }

    #[test]
    fn table_tail_matches_asymptotic_series_where_both_apply() {
        let t = tables();
        for k in [600.0, 1000.0, 3000.0] {
            assert!((t.tails[k as usize] - asymptotic_tail(k)).abs() < 1e-16);
        }
    }

    #[test]
    fn continuous_across_table_boundary_and_odd() {
        let x = 1.0 / (CACHED_PERIODS as f64 * PI);
        let l = primitive(x * (1.0 - 1e-9));
        let r = primitive(x * (1.0 + 1e-9));
        assert!((r - l).abs() < 1e-14);
        assert_eq!(primitive(-0.37), -primitive(0.37));
    }

    #[test]
    fn derivative_matches_finite_difference() {
        for x in [0.3, 1.7, -0.05] {
            let h = 1e-6;
            let fd = (primitive(x + h) - primitive(x - h)) / (2.0 * h);
            assert!((fd - derivative(x)).abs() < 1e-6, "x = {x}");
        }
    }
}
