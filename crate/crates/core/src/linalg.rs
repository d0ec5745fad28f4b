//! Dense complex linear algebra helpers on top of `nalgebra`.
//!
//! Everything here returns spectra in a fixed order with deterministic tie
//! breaking so that downstream truncations are reproducible.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

/// Eigendecomposition of a Hermitian matrix, eigenvalues ascending.
///
/// Columns of the returned matrix are the eigenvectors. Equal eigenvalues
/// keep the order produced by the underlying solver.
pub fn eigh(m: &DMatrix<C64>) -> (Vec<f64>, DMatrix<C64>) {
    let n = m.nrows();
    if n == 0 {
        return (Vec::new(), DMatrix::zeros(0, 0));
    }
    let herm = hermitian_part(m);
    let eig = herm.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = DMatrix::zeros(n, n);
    for (col, &i) in order.iter().enumerate() {
        vectors.set_column(col, &eig.eigenvectors.column(i));
    }
    (values, vectors)
}

/// Eigenvalues only, ascending.
pub fn eigvalsh(m: &DMatrix<C64>) -> Vec<f64> {
    if m.nrows() == 0 {
        return Vec::new();
    }
    let mut v: Vec<f64> = hermitian_part(m).symmetric_eigenvalues().iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}

/// `(m + m†) / 2`.
pub fn hermitian_part(m: &DMatrix<C64>) -> DMatrix<C64> {
    (m + m.adjoint()).scale(0.5)
}

/// Largest entrywise deviation `|m - m†|`.
pub fn hermiticity_error(m: &DMatrix<C64>) -> f64 {
    let n = m.nrows();
    let mut err: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            err = err.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    err
}

/// Trace norm of a Hermitian matrix (sum of absolute eigenvalues).
pub fn trace_norm(m: &DMatrix<C64>) -> f64 {
    eigvalsh(m).iter().map(|v| v.abs()).sum()
}

pub fn trace(m: &DMatrix<C64>) -> C64 {
    (0..m.nrows().min(m.ncols())).map(|i| m[(i, i)]).sum()
}

/// Kronecker product with `a` as the more significant factor.
pub fn kron(a: &DMatrix<C64>, b: &DMatrix<C64>) -> DMatrix<C64> {
    a.kronecker(b)
}

/// Singular value decomposition `m = u · diag(s) · vt`.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: DMatrix<C64>,
    pub s: Vec<f64>,
    pub vt: DMatrix<C64>,
}

/// Thin SVD with singular values sorted descending. Ties keep the lower
/// original index first.
pub fn svd(m: &DMatrix<C64>) -> Svd {
    let (r, c) = m.shape();
    let k = r.min(c);
    if k == 0 {
        return Svd { u: DMatrix::zeros(r, 0), s: Vec::new(), vt: DMatrix::zeros(0, c) };
    }
    let dec = m.clone().svd_unordered(true, true);
    let u0 = dec.u.expect("u requested");
    let vt0 = dec.v_t.expect("v_t requested");
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| dec.singular_values[b].total_cmp(&dec.singular_values[a]));
    let mut u = DMatrix::zeros(r, k);
    let mut vt = DMatrix::zeros(k, c);
    let mut s = Vec::with_capacity(k);
    for (dst, &src) in order.iter().enumerate() {
        u.set_column(dst, &u0.column(src));
        vt.set_row(dst, &vt0.row(src));
        s.push(dec.singular_values[src]);
    }
    Svd { u, s, vt }
}

impl Svd {
    /// Keeps the first `k` singular triplets.
    pub fn truncate(self, k: usize) -> Svd {
        let k = k.min(self.s.len());
        Svd {
            u: self.u.columns(0, k).into_owned(),
            s: self.s[..k].to_vec(),
            vt: self.vt.rows(0, k).into_owned(),
        }
    }

    /// Number of singular values above `rel · s_max`.
    pub fn rank(&self, rel: f64) -> usize {
        match self.s.first() {
            Some(&smax) if smax > 0.0 => self.s.iter().filter(|&&v| v > rel * smax).count(),
            _ => 0,
        }
    }
}

/// Orthonormal basis of the column space, at relative threshold `rel`.
pub fn range_basis(m: &DMatrix<C64>, rel: f64) -> DMatrix<C64> {
    let dec = svd(m);
    let r = dec.rank(rel);
    dec.u.columns(0, r).into_owned()
}

/// Completes the orthonormal columns of `kept` to a unitary by
/// Gram-Schmidt on the standard basis vectors, taken in index order.
pub fn complete_basis(kept: &DMatrix<C64>) -> DMatrix<C64> {
    let n = kept.nrows();
    let mut cols: Vec<DVector<C64>> = kept.column_iter().map(|c| c.into_owned()).collect();
    let mut e = 0;
    while cols.len() < n && e < n {
        let mut v = DVector::zeros(n);
        v[e] = C64::new(1.0, 0.0);
        // two passes of classical Gram-Schmidt
        for _ in 0..2 {
            for c in &cols {
                let proj = c.dotc(&v);
                v -= c * proj;
            }
        }
        let norm = v.norm();
        if norm > 1e-8 {
            cols.push(v.unscale(norm));
        }
        e += 1;
    }
    DMatrix::from_columns(&cols)
}

/// Options for [`lowest_eigenpair`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LanczosOptions {
    /// Problems up to this dimension are solved by dense diagonalization.
    pub dense_threshold: usize,
    pub krylov_dim: usize,
    pub max_restarts: usize,
    /// Residual norm at which the Ritz pair is accepted.
    pub tol: f64,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        LanczosOptions { dense_threshold: 64, krylov_dim: 24, max_restarts: 20, tol: 1e-10 }
    }
}

fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[C64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// Lowest eigenpair of the Hermitian operator `apply` acting on vectors of
/// length `dim`, started from `start`.
///
/// The returned eigenvalue never exceeds the Rayleigh quotient of `start`,
/// which is what makes variational sweeps monotone.
pub fn lowest_eigenpair<F>(dim: usize, mut apply: F, start: &[C64], opts: &LanczosOptions) -> (f64, Vec<C64>)
where
    F: FnMut(&[C64], &mut [C64]),
{
    assert_eq!(start.len(), dim);
    if dim <= opts.dense_threshold {
        let mut m = DMatrix::zeros(dim, dim);
        let mut e = vec![C64::new(0.0, 0.0); dim];
        let mut out = vec![C64::new(0.0, 0.0); dim];
        for j in 0..dim {
            e.iter_mut().for_each(|x| *x = C64::new(0.0, 0.0));
            e[j] = C64::new(1.0, 0.0);
            apply(&e, &mut out);
            for i in 0..dim {
                m[(i, j)] = out[i];
            }
        }
        let (vals, vecs) = eigh(&m);
        // a degenerate lowest level: prefer the eigenvector closest to start
        let lowest = vals[0];
        let degenerate = vals.iter().take_while(|&&v| v - lowest < 1e-12 * (1.0 + lowest.abs())).count();
        let mut v: Vec<C64> = if degenerate > 1 && norm(start) > 0.0 {
            let mut proj = vec![C64::new(0.0, 0.0); dim];
            for c in 0..degenerate {
                let col: Vec<C64> = vecs.column(c).iter().copied().collect();
                let a = dot(&col, start);
                proj.iter_mut().zip(&col).for_each(|(p, x)| *p += a * x);
            }
            if norm(&proj) > 1e-8 {
                proj
            } else {
                vecs.column(0).iter().copied().collect()
            }
        } else {
            vecs.column(0).iter().copied().collect()
        };
        let nv = norm(&v);
        v.iter_mut().for_each(|x| *x /= nv);
        return (lowest, v);
    }

    let mut v0: Vec<C64> = start.to_vec();
    let n0 = norm(&v0);
    if n0 < 1e-300 {
        for (i, x) in v0.iter_mut().enumerate() {
            *x = C64::new(1.0 + 0.1 * ((i * 7919) % 13) as f64, 0.0);
        }
    }
    let n0 = norm(&v0);
    v0.iter_mut().for_each(|x| *x /= n0);

    let mut w = vec![C64::new(0.0, 0.0); dim];
    apply(&v0, &mut w);
    let mut best_val = dot(&v0, &w).re;
    let mut best_vec = v0.clone();

    let kmax = opts.krylov_dim.min(dim).max(2);
    for _ in 0..opts.max_restarts.max(1) {
        let mut basis: Vec<Vec<C64>> = Vec::with_capacity(kmax);
        let mut alpha: Vec<f64> = Vec::with_capacity(kmax);
        let mut beta: Vec<f64> = Vec::with_capacity(kmax);
        basis.push(best_vec.clone());
        let mut last_beta;
        loop {
            let j = basis.len() - 1;
            apply(&basis[j], &mut w);
            let a = dot(&basis[j], &w).re;
            alpha.push(a);
            // full reorthogonalization, twice
            for _ in 0..2 {
                for b in &basis {
                    let c = dot(b, &w);
                    w.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
                }
            }
            let bnorm = norm(&w);
            last_beta = bnorm;
            if basis.len() == kmax || bnorm < 1e-13 {
                break;
            }
            beta.push(bnorm);
            basis.push(w.iter().map(|x| x / bnorm).collect());
        }
        let k = alpha.len();
        let mut t = DMatrix::<f64>::zeros(k, k);
        for i in 0..k {
            t[(i, i)] = alpha[i];
            if i + 1 < k {
                t[(i, i + 1)] = beta[i];
                t[(i + 1, i)] = beta[i];
            }
        }
        let eig = t.symmetric_eigen();
        let mut imin = 0;
        for i in 1..k {
            if eig.eigenvalues[i] < eig.eigenvalues[imin] {
                imin = i;
            }
        }
        let theta = eig.eigenvalues[imin];
        let y = eig.eigenvectors.column(imin);
        let mut ritz = vec![C64::new(0.0, 0.0); dim];
        for (i, b) in basis.iter().enumerate() {
            let yi = y[i];
            ritz.iter_mut().zip(b).for_each(|(r, x)| *r += x * yi);
        }
        let rn = norm(&ritz);
        ritz.iter_mut().for_each(|x| *x /= rn);
        let residual = (last_beta * y[k - 1]).abs();
        if theta <= best_val + 1e-14 * (1.0 + best_val.abs()) {
            best_val = theta;
            best_vec = ritz;
        }
        if residual < opts.tol || last_beta < 1e-13 {
            break;
        }
    }
    (best_val, best_vec)
}
