//! Dirichlet problem for `div G(∇u) = 0` on the unit disc with piecewise-affine elements.

pub mod assemble;
pub mod conjugate;
pub mod fem;
pub mod mesh;
pub mod nonlinear;
pub mod sparse;
pub mod study;

pub use fem::{GridFunction, Layout};
pub use mesh::{build_disc_mesh, DiscDomain, MeshQuality};
pub use nonlinear::{solve_dirichlet, SolveOptions, SolveReport, SolverContext, Strategy};
pub use assemble::{assemble_beltrami, BeltramiAssembly};
pub use conjugate::{reconstruct_conjugate, Conjugate, ConjugateReport};
pub use study::{approximation_study, StudyReport};
