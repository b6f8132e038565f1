//! Monotone planar vector fields, their Beltrami counterparts, and a finite-element
//! toolkit for `div G(∇u) = 0` on the unit disc.

pub mod beltrami;
pub mod classify;
pub mod diagnostics;
pub mod duality;
pub mod error;
pub mod field;
pub mod geom;
pub mod quadrature;
pub mod run;
pub mod solver;

pub use error::{Error, Result};
pub use field::{FieldSpec, MonotoneField, VectorField};
pub use geom::{Mat2, PlaneVec};
