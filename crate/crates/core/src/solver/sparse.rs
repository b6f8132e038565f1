//! Compressed sparse rows, ILU(0), restarted GMRES and a banded LU fallback.

/// Square sparse matrix with a fixed pattern.
#[derive(Clone, Debug)]
pub struct Csr {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
    pub vals: Vec<f64>,
}

impl Csr {
    /// Zero matrix on a pattern of sorted, deduplicated column lists.
    pub fn from_pattern(rows: &[Vec<usize>]) -> Self {
        let mut row_ptr = Vec::with_capacity(rows.len() + 1);
        let mut col_idx = Vec::new();
        row_ptr.push(0);
        for r in rows {
            col_idx.extend_from_slice(r);
            row_ptr.push(col_idx.len());
        }
        let nnz = col_idx.len();
        Csr { n: rows.len(), row_ptr, col_idx, vals: vec![0.0; nnz] }
    }

    pub fn zero_values(&mut self) {
        self.vals.iter_mut().for_each(|v| *v = 0.0);
    }

    /// Position of `(i, j)` in the value array.
    #[inline]
    pub fn find(&self, i: usize, j: usize) -> Option<usize> {
        let row = &self.col_idx[self.row_ptr[i]..self.row_ptr[i + 1]];
        row.binary_search(&j).ok().map(|k| self.row_ptr[i] + k)
    }

    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let k = self.find(i, j).expect("entry outside the sparsity pattern");
        self.vals[k] += v;
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        for i in 0..self.n {
            let mut s = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                s += self.vals[k] * x[self.col_idx[k]];
            }
            y[i] = s;
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.find(i, i).map(|k| self.vals[k]).unwrap_or(0.0)).collect()
    }

    /// `self + s·other` on an identical pattern.
    pub fn axpy_same_pattern(&mut self, s: f64, other: &Csr) {
        debug_assert_eq!(self.col_idx, other.col_idx);
        for (a, b) in self.vals.iter_mut().zip(&other.vals) {
            *a += s * b;
        }
    }

    /// Half-bandwidth `max |i − j|` over stored entries.
    pub fn bandwidth(&self) -> usize {
        let mut bw = 0;
        for i in 0..self.n {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                bw = bw.max(i.abs_diff(self.col_idx[k]));
            }
        }
        bw
    }
}

/// Incomplete LU factorization with the pattern of the matrix.
pub struct Ilu0 {
    lu: Csr,
    diag: Vec<usize>,
}

impl Ilu0 {
    pub fn new(a: &Csr) -> Option<Self> {
        let mut lu = a.clone();
        let n = lu.n;
        let mut diag = vec![0; n];
        for i in 0..n {
            diag[i] = lu.find(i, i)?;
        }
        for i in 1..n {
            let (start, end) = (lu.row_ptr[i], lu.row_ptr[i + 1]);
            for kk in start..end {
                let k = lu.col_idx[kk];
                if k >= i {
                    break;
                }
                let piv = lu.vals[diag[k]];
                if piv == 0.0 || !piv.is_finite() {
                    return None;
                }
                let factor = lu.vals[kk] / piv;
                lu.vals[kk] = factor;
                // Row i -= factor * row k, restricted to the pattern of row i.
                let (ks, ke) = (diag[k] + 1, lu.row_ptr[k + 1]);
                let mut p = kk + 1;
                for q in ks..ke {
                    let j = lu.col_idx[q];
                    while p < end && lu.col_idx[p] < j {
                        p += 1;
                    }
                    if p < end && lu.col_idx[p] == j {
                        lu.vals[p] -= factor * lu.vals[q];
                    }
                }
            }
            if lu.vals[diag[i]] == 0.0 {
                return None;
            }
        }
        Some(Ilu0 { lu, diag })
    }

    pub fn apply(&self, r: &[f64], z: &mut [f64]) {
        let n = self.lu.n;
        for i in 0..n {
            let mut s = r[i];
            for k in self.lu.row_ptr[i]..self.diag[i] {
                s -= self.lu.vals[k] * z[self.lu.col_idx[k]];
            }
            z[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = z[i];
            for k in self.diag[i] + 1..self.lu.row_ptr[i + 1] {
                s -= self.lu.vals[k] * z[self.lu.col_idx[k]];
            }
            z[i] = s / self.lu.vals[self.diag[i]];
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Outcome of an iterative solve.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KrylovStats {
    pub iterations: usize,
    pub relative_residual: f64,
    pub converged: bool,
}

/// Right-preconditioned restarted GMRES.
pub fn gmres(a: &Csr, b: &[f64], x: &mut [f64], m: &Ilu0, rtol: f64, restart: usize, max_iter: usize) -> KrylovStats {
    let n = a.n;
    let bnorm = norm(b).max(f64::MIN_POSITIVE);
    let mut r = vec![0.0; n];
    let mut w = vec![0.0; n];
    let mut z = vec![0.0; n];
    let mut total = 0;
    let mut rel;
    while total < max_iter {
        a.matvec(x, &mut r);
        for i in 0..n {
            r[i] = b[i] - r[i];
        }
        let beta = norm(&r);
        rel = beta / bnorm;
        if rel <= rtol {
            return KrylovStats { iterations: total, relative_residual: rel, converged: true };
        }
        let mut v: Vec<Vec<f64>> = vec![r.iter().map(|t| t / beta).collect()];
        let mut hess = vec![vec![0.0; restart]; restart + 1];
        let (mut cs, mut sn) = (vec![0.0; restart], vec![0.0; restart]);
        let mut g = vec![0.0; restart + 1];
        g[0] = beta;
        let mut k_used = 0;
        for k in 0..restart {
            m.apply(&v[k], &mut z);
            a.matvec(&z, &mut w);
            for j in 0..=k {
                let hjk = dot(&w, &v[j]);
                hess[j][k] = hjk;
                for i in 0..n {
                    w[i] -= hjk * v[j][i];
                }
            }
            let hn = norm(&w);
            hess[k + 1][k] = hn;
            for j in 0..k {
                let t = cs[j] * hess[j][k] + sn[j] * hess[j + 1][k];
                hess[j + 1][k] = -sn[j] * hess[j][k] + cs[j] * hess[j + 1][k];
                hess[j][k] = t;
            }
            let den = hess[k][k].hypot(hess[k + 1][k]);
            if den == 0.0 {
                k_used = k;
                break;
            }
            cs[k] = hess[k][k] / den;
            sn[k] = hess[k + 1][k] / den;
            hess[k][k] = den;
            hess[k + 1][k] = 0.0;
            g[k + 1] = -sn[k] * g[k];
            g[k] *= cs[k];
            total += 1;
            k_used = k + 1;
            rel = g[k + 1].abs() / bnorm;
            if rel <= rtol || total >= max_iter || hn == 0.0 {
                break;
            }
            v.push(w.iter().map(|t| t / hn).collect());
        }
        // Back substitution and update x += M⁻¹ V y.
        let mut y = vec![0.0; k_used];
        for i in (0..k_used).rev() {
            let mut s = g[i];
            for j in i + 1..k_used {
                s -= hess[i][j] * y[j];
            }
            y[i] = s / hess[i][i];
        }
        let mut u = vec![0.0; n];
        for (j, yj) in y.iter().enumerate() {
            for i in 0..n {
                u[i] += yj * v[j][i];
            }
        }
        m.apply(&u, &mut z);
        for i in 0..n {
            x[i] += z[i];
        }
        if k_used == 0 {
            break;
        }
    }
    a.matvec(x, &mut r);
    for i in 0..n {
        r[i] = b[i] - r[i];
    }
    rel = norm(&r) / bnorm;
    KrylovStats { iterations: total, relative_residual: rel, converged: rel <= rtol }
}

/// Banded LU without pivoting; adequate for matrices with positive definite symmetric part.
pub fn banded_solve(a: &Csr, b: &[f64]) -> Option<Vec<f64>> {
    let n = a.n;
    let bw = a.bandwidth();
    let width = 2 * bw + 1;
    let mut band = vec![0.0; n * width];
    let at = |i: usize, j: usize| i * width + (j + bw - i);
    for i in 0..n {
        for k in a.row_ptr[i]..a.row_ptr[i + 1] {
            band[at(i, a.col_idx[k])] = a.vals[k];
        }
    }
    let mut x = b.to_vec();
    for k in 0..n {
        let piv = band[at(k, k)];
        if piv == 0.0 || !piv.is_finite() {
            return None;
        }
        let last = (k + bw).min(n - 1);
        for i in k + 1..=last {
            let f = band[at(i, k)] / piv;
            if f == 0.0 {
                continue;
            }
            band[at(i, k)] = 0.0;
            for j in k + 1..=last {
                band[at(i, j)] -= f * band[at(k, j)];
            }
            x[i] -= f * x[k];
        }
    }
    for k in (0..n).rev() {
        let last = (k + bw).min(n - 1);
        let mut s = x[k];
        for j in k + 1..=last {
            s -= band[at(k, j)] * x[j];
        }
        x[k] = s / band[at(k, k)];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}

/// Solves `A x = b` by ILU(0)-GMRES with a direct fallback.
pub fn solve(a: &Csr, b: &[f64], rtol: f64) -> Option<Vec<f64>> {
    let mut x = vec![0.0; a.n];
    if a.n == 0 {
        return Some(x);
    }
    if let Some(m) = Ilu0::new(a) {
        let stats = gmres(a, b, &mut x, &m, rtol, 60, 3000);
        if stats.converged {
            return Some(x);
        }
    }
    banded_solve(a, b)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplace_1d(n: usize, shift: f64) -> Csr {
        let rows: Vec<Vec<usize>> = (0..n).map(|i| (i.saturating_sub(1)..=(i + 1).min(n - 1)).collect()).collect();
        let mut a = Csr::from_pattern(&rows);
        for i in 0..n {
            a.add(i, i, 2.0 + shift);
            if i > 0 {
                a.add(i, i - 1, -1.0 + 0.3);
            }
            if i + 1 < n {
                a.add(i, i + 1, -1.0 - 0.3);
            }
        }
        a
    }

    #[test]
    fn ilu_is_exact_for_tridiagonal() {
        let a = laplace_1d(50, 0.1);
        let m = Ilu0::new(&a).unwrap();
        let b: Vec<f64> = (0..50).map(|i| (i as f64).sin()).collect();
        let mut x = vec![0.0; 50];
        m.apply(&b, &mut x);
        let mut ax = vec![0.0; 50];
        a.matvec(&x, &mut ax);
        assert!(ax.iter().zip(&b).all(|(p, q)| (p - q).abs() < 1e-12));
    }

    #[test]
    fn gmres_and_banded_agree() {
        let a = laplace_1d(200, 0.01);
        let b: Vec<f64> = (0..200).map(|i| ((i * 7) % 11) as f64 - 5.0).collect();
        let x1 = solve(&a, &b, 1e-13).unwrap();
        let x2 = banded_solve(&a, &b).unwrap();
        let err = x1.iter().zip(&x2).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
        assert!(err < 1e-8, "{err}");
    }
}
