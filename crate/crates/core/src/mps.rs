//! Open-boundary matrix product states.
//!
//! A state on `N` sites is stored as tensors `M_i[a, s, b]` of shape
//! `D_i × d_i × D_{i+1}` with `D_1 = D_{N+1} = 1`, so that
//!
//! ```text
//! |ψ⟩ = Σ_s M_1[s_1] M_2[s_2] ⋯ M_N[s_N] |s_1 s_2 ⋯ s_N⟩.
//! ```
//!
//! The canonical gauge used throughout the crate is `Σ_s M_i[s] M_i[s]† = 1`
//! at every site. In that gauge everything to the right of a cut is an
//! isometry, the norm lives in the first tensor, and reduced densities of a
//! window only need the environment from the left.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use rand::Rng;

use crate::linalg;
use crate::{check_dense, Error, Result};

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// Gauge tag carried by an [`Mps`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Gauge {
    None,
    /// `Σ_s M[s] M[s]† = 1` at every site and unit norm.
    LeftCanonical,
}

/// One site tensor `M[a, s, b]`, stored row-major in `(a, s, b)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SiteTensor {
    left: usize,
    phys: usize,
    right: usize,
    data: Vec<C64>,
}

impl SiteTensor {
    pub fn new(left: usize, phys: usize, right: usize, data: Vec<C64>) -> Result<Self> {
        if left == 0 || phys == 0 || right == 0 {
            return Err(Error::Structure(format!("zero dimension in site tensor {left}x{phys}x{right}")));
        }
        if data.len() != left * phys * right {
            return Err(Error::Structure(format!(
                "site tensor {left}x{phys}x{right} needs {} entries, got {}",
                left * phys * right,
                data.len()
            )));
        }
        Ok(SiteTensor { left, phys, right, data })
    }

    pub fn zeros(left: usize, phys: usize, right: usize) -> Self {
        SiteTensor { left, phys, right, data: vec![ZERO; left * phys * right] }
    }

    pub fn left(&self) -> usize {
        self.left
    }
    pub fn phys(&self) -> usize {
        self.phys
    }
    pub fn right(&self) -> usize {
        self.right
    }
    pub fn data(&self) -> &[C64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, a: usize, s: usize, b: usize) -> C64 {
        self.data[(a * self.phys + s) * self.right + b]
    }

    #[inline]
    pub fn set(&mut self, a: usize, s: usize, b: usize, v: C64) {
        self.data[(a * self.phys + s) * self.right + b] = v;
    }

    /// The `D_l × D_r` matrix `M[s]`.
    pub fn matrix(&self, s: usize) -> DMatrix<C64> {
        DMatrix::from_fn(self.left, self.right, |a, b| self.get(a, s, b))
    }

    /// Reshape to `D_l × (d·D_r)`.
    pub fn to_left_matrix(&self) -> DMatrix<C64> {
        DMatrix::from_row_slice(self.left, self.phys * self.right, &self.data)
    }

    /// Reshape to `(D_l·d) × D_r`.
    pub fn to_right_matrix(&self) -> DMatrix<C64> {
        DMatrix::from_row_slice(self.left * self.phys, self.right, &self.data)
    }

    pub fn from_left_matrix(m: &DMatrix<C64>, phys: usize) -> Self {
        let left = m.nrows();
        let right = m.ncols() / phys;
        let mut t = SiteTensor::zeros(left, phys, right);
        for a in 0..left {
            for c in 0..phys * right {
                t.data[a * phys * right + c] = m[(a, c)];
            }
        }
        t
    }

    pub fn from_right_matrix(m: &DMatrix<C64>, phys: usize) -> Self {
        let left = m.nrows() / phys;
        let right = m.ncols();
        let mut t = SiteTensor::zeros(left, phys, right);
        for r in 0..left * phys {
            for b in 0..right {
                t.data[r * right + b] = m[(r, b)];
            }
        }
        t
    }

    /// `Σ_s M[s] M[s]†`.
    pub fn right_gram(&self) -> DMatrix<C64> {
        let m = self.to_left_matrix();
        &m * m.adjoint()
    }

    fn scale(&mut self, c: C64) {
        self.data.iter_mut().for_each(|x| *x *= c);
    }
}

/// Matrix product state with open boundaries.
#[derive(Debug, Clone, PartialEq)]
pub struct Mps {
    sites: Vec<SiteTensor>,
    gauge: Gauge,
}

impl Mps {
    /// Validates shapes and boundary dimensions. The gauge tag is trusted;
    /// use [`Mps::canonicalize_left`] to obtain a verified canonical form.
    pub fn new(sites: Vec<SiteTensor>, gauge: Gauge) -> Result<Self> {
        if sites.is_empty() {
            return Err(Error::Structure("an MPS needs at least one site".into()));
        }
        if sites[0].left != 1 {
            return Err(Error::Structure(format!("left boundary bond is {}, expected 1", sites[0].left)));
        }
        let last = sites.len() - 1;
        if sites[last].right != 1 {
            return Err(Error::Structure(format!("right boundary bond is {}, expected 1", sites[last].right)));
        }
        for i in 0..last {
            if sites[i].right != sites[i + 1].left {
                return Err(Error::Structure(format!(
                    "bond mismatch between sites {i} and {}: {} vs {}",
                    i + 1,
                    sites[i].right,
                    sites[i + 1].left
                )));
            }
        }
        Ok(Mps { sites, gauge })
    }

    /// Product state from per-site (not necessarily normalized) vectors.
    pub fn product(local: &[Vec<C64>]) -> Result<Self> {
        let sites = local
            .iter()
            .map(|v| SiteTensor::new(1, v.len(), 1, v.clone()))
            .collect::<Result<Vec<_>>>()?;
        Mps::new(sites, Gauge::None)
    }

    /// Computational basis state `|s_1 ⋯ s_N⟩` on qudits of dimension `d`.
    pub fn basis_state(bits: &[usize], d: usize) -> Result<Self> {
        let local: Vec<Vec<C64>> = bits
            .iter()
            .map(|&b| {
                let mut v = vec![ZERO; d];
                v[b] = ONE;
                v
            })
            .collect();
        let mut m = Mps::product(&local)?;
        m.gauge = Gauge::LeftCanonical;
        Ok(m)
    }

    /// Random canonical MPS with bond dimension at most `bond`. Bonds are
    /// capped by the Hilbert-space dimensions on either side.
    pub fn random<R: Rng + ?Sized>(phys: &[usize], bond: usize, rng: &mut R) -> Result<Self> {
        let n = phys.len();
        let mut dims = vec![1usize; n + 1];
        for i in 1..n {
            let left: usize = phys[..i].iter().fold(1usize, |acc, &d| acc.saturating_mul(d));
            let right: usize = phys[i..].iter().fold(1usize, |acc, &d| acc.saturating_mul(d));
            dims[i] = bond.max(1).min(left).min(right);
        }
        let sites = (0..n)
            .map(|i| {
                let len = dims[i] * phys[i] * dims[i + 1];
                let data = (0..len).map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
                SiteTensor::new(dims[i], phys[i], dims[i + 1], data)
            })
            .collect::<Result<Vec<_>>>()?;
        Mps::new(sites, Gauge::None)?.canonicalize_left()
    }

    /// Exact MPS of a dense state by successive SVDs.
    pub fn from_dense(amplitudes: &[C64], phys: &[usize]) -> Result<Self> {
        let total: usize = phys.iter().product();
        if amplitudes.len() != total {
            return Err(Error::DimensionMismatch(format!("{} amplitudes for dimension {total}", amplitudes.len())));
        }
        let n = phys.len();
        let mut sites = Vec::with_capacity(n);
        // rest: (D_left * d_i) x (remaining) at each step
        let mut rest = DMatrix::from_row_slice(1, total, amplitudes);
        let mut left = 1;
        for (i, &d) in phys.iter().enumerate() {
            let cols = rest.ncols() / d;
            let m = DMatrix::from_fn(left * d, cols, |r, c| {
                let a = r / d;
                let s = r % d;
                rest[(a, s * cols + c)]
            });
            if i == n - 1 {
                sites.push(SiteTensor::from_right_matrix(&m, d));
                break;
            }
            let dec = linalg::svd(&m);
            let k = dec.rank(1e-14).max(1);
            let dec = dec.truncate(k);
            sites.push(SiteTensor::from_right_matrix(&dec.u, d));
            let sd = DMatrix::from_diagonal(&DVector::from_iterator(k, dec.s.iter().map(|&x| C64::new(x, 0.0))));
            rest = sd * dec.vt;
            left = k;
        }
        Mps::new(sites, Gauge::None)?.canonicalize_left()
    }

    pub fn n_sites(&self) -> usize {
        self.sites.len()
    }

    pub fn sites(&self) -> &[SiteTensor] {
        &self.sites
    }

    pub fn site(&self, i: usize) -> &SiteTensor {
        &self.sites[i]
    }

    pub fn into_sites(self) -> Vec<SiteTensor> {
        self.sites
    }

    pub fn gauge(&self) -> Gauge {
        self.gauge
    }

    pub fn phys_dims(&self) -> Vec<usize> {
        self.sites.iter().map(|t| t.phys).collect()
    }

    /// `D_1, …, D_{N+1}`.
    pub fn bond_dims(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.sites.iter().map(|t| t.left).collect();
        v.push(1);
        v
    }

    pub fn max_bond(&self) -> usize {
        self.bond_dims().into_iter().max().unwrap_or(1)
    }

    /// Multiplies the state by `c` (drops the canonical tag unless |c| = 1).
    pub fn scaled(&self, c: C64) -> Mps {
        let mut out = self.clone();
        out.sites[0].scale(c);
        if (c.norm() - 1.0).abs() > 1e-14 {
            out.gauge = Gauge::None;
        }
        out
    }

    /// True when `Σ_s M[s]M[s]† = 1` holds at every site within `tol`.
    pub fn is_left_canonical(&self, tol: f64) -> bool {
        self.sites.iter().all(|t| {
            let g = t.right_gram();
            (g - DMatrix::identity(t.left, t.left)).camax() <= tol
        })
    }

    /// Brings the state into the canonical gauge by a right-to-left sweep of
    /// SVDs. Exactly-null bond directions are dropped; the state is
    /// normalized.
    pub fn canonicalize_left(&self) -> Result<Mps> {
        let n = self.sites.len();
        let mut sites = self.sites.clone();
        for i in (1..n).rev() {
            let d = sites[i].phys;
            let m = sites[i].to_left_matrix();
            let dec = linalg::svd(&m);
            let k = dec.rank(1e-15).max(1);
            let dec = dec.truncate(k);
            sites[i] = SiteTensor::from_left_matrix(&dec.vt, d);
            let us = DMatrix::from_fn(dec.u.nrows(), k, |r, c| dec.u[(r, c)] * dec.s[c]);
            let prev = sites[i - 1].to_right_matrix() * us;
            sites[i - 1] = SiteTensor::from_right_matrix(&prev, sites[i - 1].phys);
        }
        let norm = sites[0].data.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::Structure("cannot canonicalize a zero state".into()));
        }
        sites[0].scale(C64::new(1.0 / norm, 0.0));
        Mps::new(sites, Gauge::LeftCanonical)
    }

    fn check_compatible(&self, other: &Mps) -> Result<()> {
        if self.n_sites() != other.n_sites() || self.phys_dims() != other.phys_dims() {
            return Err(Error::DimensionMismatch(format!(
                "states with {} and {} sites / physical dims {:?} vs {:?}",
                self.n_sites(),
                other.n_sites(),
                self.phys_dims(),
                other.phys_dims()
            )));
        }
        Ok(())
    }

    /// `⟨self|other⟩` by a left-to-right transfer contraction.
    pub fn overlap(&self, other: &Mps) -> Result<C64> {
        self.check_compatible(other)?;
        let mut env = DMatrix::from_element(1, 1, ONE);
        for (a, b) in self.sites.iter().zip(&other.sites) {
            let mut next = DMatrix::zeros(a.right, b.right);
            for s in 0..a.phys {
                next += a.matrix(s).adjoint() * &env * b.matrix(s);
            }
            env = next;
        }
        Ok(env[(0, 0)])
    }

    pub fn norm_sqr(&self) -> f64 {
        self.overlap(self).map(|c| c.re).unwrap_or(0.0)
    }

    /// `|⟨self|other⟩|² / (⟨self|self⟩⟨other|other⟩)`.
    pub fn fidelity(&self, other: &Mps) -> Result<f64> {
        let o = self.overlap(other)?;
        Ok(o.norm_sqr() / (self.norm_sqr() * other.norm_sqr()))
    }

    /// `⟨ψ|O_1 ⊗ ⋯ ⊗ O_N|ψ⟩ / ⟨ψ|ψ⟩` for a product operator.
    pub fn product_expectation(&self, ops: &[DMatrix<C64>]) -> Result<C64> {
        if ops.len() != self.n_sites() {
            return Err(Error::DimensionMismatch(format!("{} operators for {} sites", ops.len(), self.n_sites())));
        }
        let mut env = DMatrix::from_element(1, 1, ONE);
        for (t, op) in self.sites.iter().zip(ops) {
            if op.nrows() != t.phys || op.ncols() != t.phys {
                return Err(Error::DimensionMismatch("operator does not match physical dimension".into()));
            }
            let mut next = DMatrix::zeros(t.right, t.right);
            for s in 0..t.phys {
                let ms = t.matrix(s);
                for u in 0..t.phys {
                    let o = op[(s, u)];
                    if o != ZERO {
                        next += (ms.adjoint() * &env * t.matrix(u)) * o;
                    }
                }
            }
            env = next;
        }
        Ok(env[(0, 0)] / self.norm_sqr())
    }

    fn left_grams(&self) -> Vec<DMatrix<C64>> {
        // G_L^{(i)}[a,a'] = ⟨L_{a'}|L_a⟩ for the left part ending before site i
        let mut out = Vec::with_capacity(self.n_sites() + 1);
        let mut g = DMatrix::from_element(1, 1, ONE);
        out.push(g.clone());
        for t in &self.sites {
            let mut next = DMatrix::zeros(t.right, t.right);
            for s in 0..t.phys {
                let m = t.matrix(s);
                next += m.transpose() * &g * m.map(|x| x.conj());
            }
            g = next;
            out.push(g.clone());
        }
        out
    }

    fn right_grams(&self) -> Vec<DMatrix<C64>> {
        let n = self.n_sites();
        let mut out = vec![DMatrix::zeros(0, 0); n + 1];
        let mut g = DMatrix::from_element(1, 1, ONE);
        out[n] = g.clone();
        for i in (0..n).rev() {
            let t = &self.sites[i];
            let mut next = DMatrix::zeros(t.left, t.left);
            for s in 0..t.phys {
                let m = t.matrix(s);
                next += &m * &g * m.adjoint();
            }
            g = next;
            out[i] = g.clone();
        }
        out
    }

    fn window_density(&self, start: usize, len: usize, gl: &DMatrix<C64>, gr: &DMatrix<C64>) -> DensityMatrix {
        let phys: Vec<usize> = self.sites[start..start + len].iter().map(|t| t.phys).collect();
        let dl = self.sites[start].left;
        // theta[a][x] is a row vector over the current right bond
        let mut theta: Vec<DMatrix<C64>> = (0..dl).map(|a| {
            let mut m = DMatrix::zeros(1, dl);
            m[(0, a)] = ONE;
            m
        }).collect();
        for t in &self.sites[start..start + len] {
            let mats: Vec<DMatrix<C64>> = (0..t.phys).map(|s| t.matrix(s)).collect();
            theta = theta
                .into_iter()
                .map(|rows| {
                    let x = rows.nrows();
                    let mut next = DMatrix::zeros(x * t.phys, t.right);
                    for r in 0..x {
                        let row = rows.row(r);
                        for (s, m) in mats.iter().enumerate() {
                            next.set_row(r * t.phys + s, &(row * m));
                        }
                    }
                    next
                })
                .collect();
        }
        let dim: usize = phys.iter().product();
        let dr = self.sites[start + len - 1].right;
        // F_x = G_L^T Θ_x G_R, T_x = Θ_x, flattened over (a, b)
        let mut f = DMatrix::zeros(dim, dl * dr);
        let mut tm = DMatrix::zeros(dim, dl * dr);
        for x in 0..dim {
            let theta_x = DMatrix::from_fn(dl, dr, |a, b| theta[a][(x, b)]);
            let fx = gl.transpose() * &theta_x * gr;
            for a in 0..dl {
                for b in 0..dr {
                    f[(x, a * dr + b)] = fx[(a, b)];
                    tm[(x, a * dr + b)] = theta_x[(a, b)];
                }
            }
        }
        let rho = f * tm.adjoint();
        let tr = linalg::trace(&rho).re;
        let rho = linalg::hermitian_part(&rho).unscale(tr);
        DensityMatrix { start, phys, matrix: rho }
    }

    /// Reduced density matrix of sites `start .. start + len`.
    pub fn reduced_density(&self, start: usize, len: usize) -> Result<DensityMatrix> {
        self.check_window(start, len)?;
        let gl = self.left_grams();
        let gr = self.right_grams();
        Ok(self.window_density(start, len, &gl[start], &gr[start + len]))
    }

    /// Reduced densities of every window of `len` consecutive sites, in
    /// order of their first site.
    pub fn window_densities(&self, len: usize) -> Result<Vec<DensityMatrix>> {
        if len == 0 || len > self.n_sites() {
            return Err(Error::InvalidArgument(format!("window length {len} on {} sites", self.n_sites())));
        }
        self.check_window(0, len)?;
        let gl = self.left_grams();
        let gr = self.right_grams();
        Ok((0..=self.n_sites() - len).map(|s| self.window_density(s, len, &gl[s], &gr[s + len])).collect())
    }

    fn check_window(&self, start: usize, len: usize) -> Result<()> {
        if len == 0 || start + len > self.n_sites() {
            return Err(Error::InvalidArgument(format!(
                "window ({start}, {len}) outside a chain of {} sites",
                self.n_sites()
            )));
        }
        let dim = self.sites[start..start + len].iter().fold(1usize, |acc, t| acc.saturating_mul(t.phys));
        check_dense(dim)
    }

    /// SVD compression to bond dimension `d_max`. At each bond the smallest
    /// Schmidt weights are also discarded while their sum stays within
    /// `tol`. Returns the compressed canonical state and the total discarded
    /// weight `w`; the fidelity with the input is exactly `1 - w`.
    pub fn compress(&self, d_max: usize, tol: f64) -> Result<(Mps, f64)> {
        if self.gauge != Gauge::LeftCanonical {
            return Err(Error::NotCanonical);
        }
        let d_max = d_max.max(1);
        let n = self.n_sites();
        let mut sites = self.sites.clone();
        let mut weight = 0.0;
        for i in 0..n - 1 {
            let d = sites[i].phys;
            let m = sites[i].to_right_matrix();
            let dec = linalg::svd(&m);
            let sq: Vec<f64> = dec.s.iter().map(|x| x * x).collect();
            let mut k = dec.s.len().min(d_max);
            let mut tail: f64 = sq[k..].iter().sum();
            while k > 1 && tail + sq[k - 1] <= tol {
                k -= 1;
                tail += sq[k];
            }
            weight += tail;
            let dec = dec.truncate(k);
            sites[i] = SiteTensor::from_right_matrix(&dec.u, d);
            let sv = DMatrix::from_fn(k, dec.vt.ncols(), |r, c| dec.vt[(r, c)] * dec.s[r]);
            let next = sv * sites[i + 1].to_left_matrix();
            sites[i + 1] = SiteTensor::from_left_matrix(&next, sites[i + 1].phys);
        }
        let out = Mps::new(sites, Gauge::None)?.canonicalize_left()?;
        Ok((out, weight))
    }

    /// Dense amplitudes, first site most significant.
    pub fn to_dense_vector(&self) -> Result<DVector<C64>> {
        let dim = self.sites.iter().fold(1usize, |acc, t| acc.saturating_mul(t.phys));
        check_dense(dim)?;
        // psi: rows = partial configurations, cols = open bond
        let mut psi = DMatrix::from_element(1, 1, ONE);
        for t in &self.sites {
            let mats: Vec<DMatrix<C64>> = (0..t.phys).map(|s| t.matrix(s)).collect();
            let mut next = DMatrix::zeros(psi.nrows() * t.phys, t.right);
            for r in 0..psi.nrows() {
                let row = psi.row(r);
                for (s, m) in mats.iter().enumerate() {
                    next.set_row(r * t.phys + s, &(row * m));
                }
            }
            psi = next;
        }
        Ok(psi.column(0).into_owned())
    }
}

/// Reduced density matrix of a contiguous window.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    start: usize,
    phys: Vec<usize>,
    matrix: DMatrix<C64>,
}

impl DensityMatrix {
    /// Validates Hermiticity (1e-12), unit trace (1e-10) and positivity
    /// (eigenvalues ≥ -1e-10).
    pub fn new(start: usize, phys: Vec<usize>, matrix: DMatrix<C64>) -> Result<Self> {
        let dim: usize = phys.iter().product();
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(Error::DimensionMismatch(format!("{}x{} matrix for window dimension {dim}", matrix.nrows(), matrix.ncols())));
        }
        let herr = linalg::hermiticity_error(&matrix);
        if herr > 1e-12 {
            return Err(Error::NotHermitian(herr));
        }
        let tr = linalg::trace(&matrix);
        if (tr - ONE).norm() > 1e-10 {
            return Err(Error::InvalidArgument(format!("trace {tr} differs from 1")));
        }
        let min = linalg::eigvalsh(&matrix).first().copied().unwrap_or(0.0);
        if min < -1e-10 {
            return Err(Error::NotPsd(min));
        }
        Ok(DensityMatrix { start, phys, matrix })
    }

    pub fn start(&self) -> usize {
        self.start
    }
    pub fn len(&self) -> usize {
        self.phys.len()
    }
    pub fn is_empty(&self) -> bool {
        self.phys.is_empty()
    }
    pub fn phys_dims(&self) -> &[usize] {
        &self.phys
    }
    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }
    pub fn into_matrix(self) -> DMatrix<C64> {
        self.matrix
    }

    /// Eigenvalues, ascending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        linalg::eigvalsh(&self.matrix)
    }

    /// Number of eigenvalues above `tol`.
    pub fn rank(&self, tol: f64) -> usize {
        self.eigenvalues().iter().filter(|&&v| v > tol).count()
    }
}

/// Partial trace of an operator on consecutive sites with dimensions `phys`
/// down to the sub-window `offset .. offset + len`.
pub fn partial_trace(m: &DMatrix<C64>, phys: &[usize], offset: usize, len: usize) -> DMatrix<C64> {
    let left: usize = phys[..offset].iter().product();
    let mid: usize = phys[offset..offset + len].iter().product();
    let right: usize = phys[offset + len..].iter().product();
    let mut out = DMatrix::zeros(mid, mid);
    for x in 0..mid {
        for y in 0..mid {
            let mut acc = ZERO;
            for l in 0..left {
                for r in 0..right {
                    acc += m[((l * mid + x) * right + r, (l * mid + y) * right + r)];
                }
            }
            out[(x, y)] = acc;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn dense_reduced(psi: &DVector<C64>, n: usize, start: usize, len: usize) -> DMatrix<C64> {
        let rho = psi * psi.adjoint();
        partial_trace(&rho, &vec![2; n], start, len)
    }

    #[test]
    fn rejects_bond_mismatch() {
        let a = SiteTensor::zeros(1, 2, 2);
        let b = SiteTensor::zeros(3, 2, 1);
        assert!(matches!(Mps::new(vec![a, b], Gauge::None), Err(Error::Structure(_))));
        let c = SiteTensor::zeros(2, 2, 1);
        assert!(matches!(Mps::new(vec![c], Gauge::None), Err(Error::Structure(_))));
    }

    #[test]
    fn product_state_is_already_canonical() {
        let m = Mps::basis_state(&[0, 0, 0, 0], 2).unwrap();
        let c = m.canonicalize_left().unwrap();
        assert_eq!(c.gauge(), Gauge::LeftCanonical);
        assert!((c.overlap(&m).unwrap().norm() - 1.0).abs() < 1e-12);
        assert_eq!(c.bond_dims(), vec![1; 5]);
    }

    #[test]
    fn random_state_satisfies_gauge_condition() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let m = Mps::random(&[2; 6], 3, &mut rng).unwrap();
        assert!(m.is_left_canonical(1e-10));
        assert!((m.norm_sqr() - 1.0).abs() < 1e-10);
        assert!((m.overlap(&m).unwrap() - ONE).norm() < 1e-10);
    }

    #[test]
    fn canonicalization_preserves_the_ray() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let sites: Vec<SiteTensor> = [(1, 3), (3, 3), (3, 3), (3, 1)]
            .iter()
            .map(|&(l, r)| {
                let data = (0..l * 2 * r).map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
                SiteTensor::new(l, 2, r, data).unwrap()
            })
            .collect();
        let raw = Mps::new(sites, Gauge::None).unwrap();
        let c = raw.canonicalize_left().unwrap();
        assert!(c.is_left_canonical(1e-10));
        let f = c.fidelity(&raw).unwrap();
        assert!((f - 1.0).abs() < 1e-10);
    }

    #[test]
    fn reduced_density_matches_dense_partial_trace() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let m = Mps::random(&[2; 7], 4, &mut rng).unwrap();
        let psi = m.to_dense_vector().unwrap();
        for (start, len) in [(0, 1), (2, 3), (4, 3), (0, 7)] {
            let dm = m.reduced_density(start, len).unwrap();
            let exact = dense_reduced(&psi, 7, start, len);
            assert!((dm.matrix() - exact).camax() < 1e-10);
        }
        // also from a non-canonical representation
        let scaled = m.scaled(C64::new(0.0, 3.0));
        let dm = scaled.reduced_density(2, 2).unwrap();
        assert!((dm.matrix() - dense_reduced(&psi, 7, 2, 2)).camax() < 1e-10);
    }

    #[test]
    fn reduced_density_respects_dense_limit() {
        let m = Mps::basis_state(&[0; 14], 2).unwrap();
        assert!(matches!(m.reduced_density(0, 13), Err(Error::DenseLimit { .. })));
        assert!(m.reduced_density(0, 12).is_ok());
    }

    #[test]
    fn compress_is_exact_when_bond_suffices_and_idempotent() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let m = Mps::random(&[2; 6], 2, &mut rng).unwrap();
        let (c, w) = m.compress(2, 0.0).unwrap();
        assert!(w < 1e-14);
        assert!((c.fidelity(&m).unwrap() - 1.0).abs() < 1e-10);

        let big = Mps::random(&[2; 8], 8, &mut rng).unwrap();
        let (c1, w1) = big.compress(3, 0.0).unwrap();
        let (_, w2) = c1.compress(3, 0.0).unwrap();
        assert!(w1 > 1e-6);
        assert!(w2 <= 1e-12);
    }

    #[test]
    fn from_dense_roundtrip() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let m = Mps::random(&[2, 3, 2, 2], 3, &mut rng).unwrap();
        let v = m.to_dense_vector().unwrap();
        let back = Mps::from_dense(v.as_slice(), &[2, 3, 2, 2]).unwrap();
        assert!((back.fidelity(&m).unwrap() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn overlap_rejects_mismatched_chains() {
        let a = Mps::basis_state(&[0, 0, 0], 2).unwrap();
        let b = Mps::basis_state(&[0, 0], 2).unwrap();
        assert!(matches!(a.overlap(&b), Err(Error::DimensionMismatch(_))));
    }
}
