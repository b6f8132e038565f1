use super::spec::{FieldSpec, Profile1d, Transform};
use super::{pathological, MonotoneField, VectorField};
use crate::beltrami::counterexample::shared_counterexample;
use crate::duality;
use crate::error::Result;
use crate::geom::{Mat2, PlaneVec};
use std::sync::Arc;

struct Identity;

impl VectorField for Identity {
    fn eval(&self, xi: PlaneVec) -> PlaneVec {
        xi
    }
    fn jacobian(&self, _: PlaneVec) -> Mat2 {
        Mat2::IDENTITY
    }
}

/// `|ξ|^{p-2} ξ`.
struct PLaplacian {
    p: f64,
}

impl VectorField for PLaplacian {
    fn eval(&self, xi: PlaneVec) -> PlaneVec {
        let r = xi.norm();
        if r == 0.0 {
            return PlaneVec::ZERO;
        }
        xi * r.powf(self.p - 2.0)
    }

    fn jacobian(&self, xi: PlaneVec) -> Mat2 {
        let r = xi.norm();
        if r == 0.0 {
            let s = if self.p > 2.0 {
                0.0
            } else if self.p == 2.0 {
                1.0
            } else {
                1e12
            };
            return Mat2::scalar(s);
        }
        let e = xi * (1.0 / r);
        (Mat2::IDENTITY + Mat2::outer(e, e) * (self.p - 2.0)) * r.powf(self.p - 2.0)
    }
}

/// `ξ + ln|ξ| · m · iξ`, continuous at the origin.
struct RotationalGm {
    m: f64,
}

impl VectorField for RotationalGm {
    fn eval(&self, xi: PlaneVec) -> PlaneVec {
        let r = xi.norm();
        if r == 0.0 {
            return PlaneVec::ZERO;
        }
        xi + xi.rot() * (self.m * r.ln())
    }

    fn jacobian(&self, xi: PlaneVec) -> Mat2 {
        let r = xi.norm();
        if r == 0.0 {
            // The rotational part has unbounded derivative at the origin; the symmetric part is I.
            return Mat2::IDENTITY;
        }
        let e = xi * (1.0 / r);
        Mat2::IDENTITY + (Mat2::ROT * r.ln() + Mat2::outer(e.rot(), e)) * self.m
    }
}

/// `(x³ − y, x + y)`.
struct G0Cubic;

impl VectorField for G0Cubic {
    fn eval(&self, xi: PlaneVec) -> PlaneVec {
        PlaneVec::new(xi.x * xi.x * xi.x - xi.y, xi.x + xi.y)
    }
    fn jacobian(&self, xi: PlaneVec) -> Mat2 {
        Mat2::new(3.0 * xi.x * xi.x, -1.0, 1.0, 1.0)
    }
}

/// `(f'(x), g'(y))`.
struct Separable {
    f: Profile1d,
    g: Profile1d,
}

impl VectorField for Separable {
    fn eval(&self, xi: PlaneVec) -> PlaneVec {
        PlaneVec::new(self.f.derivative(xi.x), self.g.derivative(xi.y))
    }
    fn jacobian(&self, xi: PlaneVec) -> Mat2 {
        Mat2::new(self.f.second_derivative(xi.x), 0.0, 0.0, self.g.second_derivative(xi.y))
    }
}

/// `(g(x), y)` with `g' = |t| + |sin(1/t)|`.
struct PathologicalSin;

impl VectorField for PathologicalSin {
    fn eval(&self, xi: PlaneVec) -> PlaneVec {
        PlaneVec::new(pathological::primitive(xi.x), xi.y)
    }
    fn jacobian(&self, xi: PlaneVec) -> Mat2 {
        Mat2::new(pathological::derivative(xi.x), 0.0, 0.0, 1.0)
    }
}

/// Builds the evaluatable field described by `spec`.
pub fn make_catalog_field(spec: &FieldSpec) -> Result<MonotoneField> {
    spec.validate()?;
    let field = match spec {
        FieldSpec::Identity => MonotoneField::new(spec.clone(), Arc::new(Identity), true, "linear")
            .with_potential(Arc::new(|xi: PlaneVec| 0.5 * xi.norm_sq())),
        FieldSpec::PLaplacian { p } => {
            let p = *p;
            let note = if p == 2.0 {
                "linear".to_string()
            } else if p > 2.0 {
                format!("C^1, degenerate at 0 (Jacobian vanishes), growth |ξ|^{}", p - 1.0)
            } else {
                format!("Hölder of order {} at 0, singular there", p - 1.0)
            };
            MonotoneField::new(spec.clone(), Arc::new(PLaplacian { p }), true, note)
                .with_potential(Arc::new(move |xi: PlaneVec| xi.norm().powf(p) / p))
        }
        FieldSpec::RotationalGm { m } => MonotoneField::new(
            spec.clone(),
            Arc::new(RotationalGm { m: *m }),
            false,
            "smooth off 0, continuous at 0 with log-singular Jacobian",
        ),
        FieldSpec::G0Cubic => MonotoneField::new(spec.clone(), Arc::new(G0Cubic), false, "polynomial"),
        FieldSpec::Separable { f, g } => {
            let (f, g) = (*f, *g);
            MonotoneField::new(spec.clone(), Arc::new(Separable { f, g }), true, "separable gradient")
                .with_potential(Arc::new(move |xi: PlaneVec| f.potential(xi.x) + g.potential(xi.y)))
        }
        FieldSpec::PathologicalSin => MonotoneField::new(
            spec.clone(),
            Arc::new(PathologicalSin),
            true,
            "C^1 off the line x = 0, Lipschitz, first component not differentiable at x = 0",
        ),
        FieldSpec::CounterexampleS6 => {
            let bundle = shared_counterexample()?;
            let g = bundle.g_field.clone();
            MonotoneField::new(spec.clone(), g.map(), false, g.smoothness_note().to_string())
        }
        FieldSpec::Composite { base, chain } => {
            let mut field = make_catalog_field(base)?;
            for t in chain {
                field = match *t {
                    Transform::Dual => duality::dual_field(&field)?,
                    Transform::Modify { radius } => duality::modify_at_infinity(&field, radius)?.0,
                    Transform::Mollify { eps, order } => {
                        duality::mollify(&field, &duality::MollifierSpec::new(eps, order)?)?
                    }
                };
            }
            field
        }
    };
    Ok(field)
}
