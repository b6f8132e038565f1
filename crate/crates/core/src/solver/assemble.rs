//! Complex solution `f = 2(u + iv)` from a primal/conjugate pair.

use super::fem::GridFunction;
use crate::beltrami::LipschitzMap;
use crate::geom::PlaneVec;

/// Nodal `f` as real and imaginary grid functions, with per-triangle Wirtinger derivatives.
#[derive(Clone, Debug)]
pub struct BeltramiAssembly {
    pub re: GridFunction,
    pub im: GridFunction,
    pub f_z: Vec<PlaneVec>,
    pub f_zbar: Vec<PlaneVec>,
    /// `(Σ_T |T| |f_z̄ − H(f_z)|²)^{1/2}`.
    pub residual: f64,
}

/// `f_z = (∂_x f − i∂_y f)/2` and `f_z̄ = (∂_x f + i∂_y f)/2` from the gradients of `Re f`, `Im f`.
pub fn wirtinger(grad_re: PlaneVec, grad_im: PlaneVec) -> (PlaneVec, PlaneVec) {
    let fx = PlaneVec::new(grad_re.x, grad_im.x);
    let fy = PlaneVec::new(grad_re.y, grad_im.y);
    ((fx - fy.rot()) * 0.5, (fx + fy.rot()) * 0.5)
}

pub fn assemble_beltrami(h: &LipschitzMap, u: &GridFunction, v: &GridFunction) -> BeltramiAssembly {
    let scale = |g: &GridFunction| GridFunction::new(g.domain.clone(), g.values.iter().map(|x| 2.0 * x).collect());
    let (re, im) = (scale(u), scale(v));
    let (f_z, f_zbar): (Vec<_>, Vec<_>) = re.gradients.iter().zip(&im.gradients).map(|(a, b)| wirtinger(*a, *b)).unzip();
    let residual = f_z
        .iter()
        .zip(&f_zbar)
        .zip(&u.domain.areas)
        .map(|((fz, fzb), a)| (*fzb - h.eval(*fz)).norm_sq() * a)
        .sum::<f64>()
        .sqrt();
    BeltramiAssembly { re, im, f_z, f_zbar, residual }
}
