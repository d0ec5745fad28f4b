//! Variational extremal eigenstates of window-local operator sums.
//!
//! A DMRG-style sweep over an MPO built from the operator sum. Local
//! problems are solved by [`linalg::lowest_eigenpair`]: dense
//! diagonalization for small effective dimensions, restarted Lanczos above
//! that. Maximization is done by minimizing the negated operator.
//!
//! Each local update is guarded: if the truncated optimum has a worse energy
//! than the block before the update, the old block is kept. Together with
//! exact environments this makes every recorded half-sweep energy monotone.
//!
//! For degenerate extremal levels the returned state is whichever vector
//! the local solver converges to; it is reproducible for a fixed seed on a
//! fixed platform.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::linalg::{self, LanczosOptions};
use crate::mpo::{Mpo, MpoSite};
use crate::mps::{Gauge, Mps, SiteTensor};
use crate::pauli::WindowOperatorSum;
use crate::{Error, Result};

const ZERO: C64 = C64::new(0.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Extremum {
    Max,
    Min,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UpdateMode {
    /// Fixed bond dimensions, one site at a time.
    SingleSite,
    /// Two sites at a time with SVD truncation; bonds grow up to `bond_dim`.
    TwoSite,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepConfig {
    pub bond_dim: usize,
    pub max_sweeps: usize,
    /// Converged once a full sweep changes the eigenvalue by less than this.
    pub tol: f64,
    pub extremum: Extremum,
    /// Seed of the random initial state when no warm start is given.
    pub seed: u64,
    pub mode: UpdateMode,
    pub lanczos: LanczosOptions,
}

impl SweepConfig {
    pub fn new(bond_dim: usize, extremum: Extremum) -> Self {
        SweepConfig {
            bond_dim,
            max_sweeps: 20,
            tol: 1e-10,
            extremum,
            seed: 0,
            mode: UpdateMode::TwoSite,
            lanczos: LanczosOptions::default(),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.bond_dim == 0 {
            return Err(Error::InvalidArgument("bond dimension must be at least 1".into()));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidArgument("sweep tolerance must be positive".into()));
        }
        if self.max_sweeps == 0 {
            return Err(Error::InvalidArgument("at least one sweep is required".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct EigenResult {
    /// Canonical state of bond dimension at most `bond_dim`.
    pub state: Mps,
    /// `⟨y|H|y⟩` for the returned state.
    pub eigenvalue: f64,
    /// Eigenvalue after every half-sweep, starting with the initial state.
    pub sweep_trace: Vec<f64>,
    pub converged: bool,
    pub sweeps: usize,
}

/// Extremal eigenstate of `opsum` within bond dimension `cfg.bond_dim`,
/// optionally starting from `warm`.
pub fn extremal_eigenstate(opsum: &WindowOperatorSum, cfg: &SweepConfig, warm: Option<&Mps>) -> Result<EigenResult> {
    cfg.validate()?;
    let n = opsum.n_sites();
    let sign = match cfg.extremum {
        Extremum::Min => 1.0,
        Extremum::Max => -1.0,
    };
    let mpo = Mpo::from_opsum(&opsum.scale(sign));
    let init = match warm {
        Some(w) => {
            if w.n_sites() != n || w.phys_dims().iter().any(|&d| d != 2) {
                return Err(Error::DimensionMismatch("warm start does not match the operator".into()));
            }
            let w = if w.gauge() == Gauge::LeftCanonical { w.clone() } else { w.canonicalize_left()? };
            if w.max_bond() > cfg.bond_dim {
                w.compress(cfg.bond_dim, 0.0)?.0
            } else {
                w
            }
        }
        None => {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            Mps::random(&vec![2; n], cfg.bond_dim, &mut rng)?
        }
    };
    let mut sweeper = Sweeper::new(mpo, init.into_sites(), cfg);
    let mut trace = vec![sign * sweeper.energy_at_start()];
    let mut converged = false;
    let mut sweeps = 0;
    let mut last = trace[0];
    while sweeps < cfg.max_sweeps {
        let e1 = sweeper.sweep_right();
        trace.push(sign * e1);
        let e2 = sweeper.sweep_left();
        trace.push(sign * e2);
        sweeps += 1;
        if (e2 - last).abs() < cfg.tol {
            converged = true;
            break;
        }
        last = e2;
    }
    let energy = sign * sweeper.energy;
    let state = Mps::new(sweeper.sites, Gauge::LeftCanonical)?;
    Ok(EigenResult { state, eigenvalue: energy, sweep_trace: trace, converged, sweeps })
}

/// Environments are stored per bond `b` (between sites `b - 1` and `b`),
/// one `D × D` matrix per MPO channel, indexed `[bra, ket]`.
struct Sweeper {
    mpo: Mpo,
    sites: Vec<SiteTensor>,
    left_env: Vec<Vec<DMatrix<C64>>>,
    right_env: Vec<Vec<DMatrix<C64>>>,
    bond_dim: usize,
    mode: UpdateMode,
    lanczos: LanczosOptions,
    energy: f64,
    blocks: Vec<MpoSite>,
}

fn unit_env() -> Vec<DMatrix<C64>> {
    vec![DMatrix::from_element(1, 1, C64::new(1.0, 0.0))]
}

fn extend_left(env: &[DMatrix<C64>], w: &MpoSite, t: &SiteTensor) -> Vec<DMatrix<C64>> {
    let d = t.phys();
    let mats: Vec<DMatrix<C64>> = (0..d).map(|s| t.matrix(s)).collect();
    let mut out = vec![DMatrix::zeros(t.right(), t.right()); w.right];
    for x in 0..w.left {
        if env[x].iter().all(|v| *v == ZERO) {
            continue;
        }
        let lm: Vec<DMatrix<C64>> = mats.iter().map(|m| &env[x] * m).collect();
        for y in 0..w.right {
            let Some(op) = w.get(x, y) else { continue };
            for s in 0..d {
                let mut acc: Option<DMatrix<C64>> = None;
                for u in 0..d {
                    let c = op[(s, u)];
                    if c != ZERO {
                        match acc.as_mut() {
                            Some(a) => *a += &lm[u] * c,
                            None => acc = Some(&lm[u] * c),
                        }
                    }
                }
                if let Some(a) = acc {
                    out[y] += mats[s].adjoint() * a;
                }
            }
        }
    }
    out
}

fn extend_right(env: &[DMatrix<C64>], w: &MpoSite, t: &SiteTensor) -> Vec<DMatrix<C64>> {
    let d = t.phys();
    let mats: Vec<DMatrix<C64>> = (0..d).map(|s| t.matrix(s)).collect();
    let mut out = vec![DMatrix::zeros(t.left(), t.left()); w.left];
    for y in 0..w.right {
        if env[y].iter().all(|v| *v == ZERO) {
            continue;
        }
        let rm: Vec<DMatrix<C64>> = mats.iter().map(|m| &env[y] * m.transpose()).collect();
        for x in 0..w.left {
            let Some(op) = w.get(x, y) else { continue };
            for s in 0..d {
                let mut acc: Option<DMatrix<C64>> = None;
                for u in 0..d {
                    let c = op[(s, u)];
                    if c != ZERO {
                        match acc.as_mut() {
                            Some(a) => *a += &rm[u] * c,
                            None => acc = Some(&rm[u] * c),
                        }
                    }
                }
                if let Some(a) = acc {
                    out[x] += mats[s].map(|v| v.conj()) * a;
                }
            }
        }
    }
    out
}

/// `H_eff θ` for a block with left bond `dl`, block dimension `dm`, right
/// bond `dr`; `theta` is laid out as `(a, s, b)`.
#[allow(clippy::too_many_arguments)]
fn apply_block(l: &[DMatrix<C64>], w: &MpoSite, r: &[DMatrix<C64>], dl: usize, dm: usize, dr: usize, theta: &[C64], out: &mut [C64]) {
    let slices: Vec<DMatrix<C64>> = (0..dm).map(|s| DMatrix::from_fn(dl, dr, |a, b| theta[(a * dm + s) * dr + b])).collect();
    let mut result = vec![DMatrix::<C64>::zeros(dl, dr); dm];
    for x in 0..w.left {
        if !(0..w.right).any(|y| w.get(x, y).is_some()) {
            continue;
        }
        let lt: Vec<DMatrix<C64>> = slices.iter().map(|m| &l[x] * m).collect();
        for y in 0..w.right {
            let Some(op) = w.get(x, y) else { continue };
            let rt = r[y].transpose();
            for s in 0..dm {
                let mut acc: Option<DMatrix<C64>> = None;
                for u in 0..dm {
                    let c = op[(s, u)];
                    if c != ZERO {
                        match acc.as_mut() {
                            Some(a) => *a += &lt[u] * c,
                            None => acc = Some(&lt[u] * c),
                        }
                    }
                }
                if let Some(a) = acc {
                    result[s] += a * &rt;
                }
            }
        }
    }
    for s in 0..dm {
        for a in 0..dl {
            for b in 0..dr {
                out[(a * dm + s) * dr + b] = result[s][(a, b)];
            }
        }
    }
}

fn rayleigh(v: &[C64], hv: &[C64]) -> f64 {
    let num: C64 = v.iter().zip(hv).map(|(a, b)| a.conj() * b).sum();
    let den: f64 = v.iter().map(|a| a.norm_sqr()).sum();
    num.re / den
}

impl Sweeper {
    fn new(mpo: Mpo, sites: Vec<SiteTensor>, cfg: &SweepConfig) -> Self {
        let n = sites.len();
        let mode = if n == 1 { UpdateMode::SingleSite } else { cfg.mode };
        let blocks = match mode {
            UpdateMode::SingleSite => (0..n).map(|j| mpo.block(j, 1)).collect(),
            UpdateMode::TwoSite => (0..n - 1).map(|j| mpo.block(j, 2)).collect(),
        };
        let mut right_env = vec![Vec::new(); n + 1];
        right_env[n] = unit_env();
        for j in (1..n).rev() {
            right_env[j] = extend_right(&right_env[j + 1], &mpo.sites[j], &sites[j]);
        }
        let mut left_env = vec![Vec::new(); n + 1];
        left_env[0] = unit_env();
        Sweeper { mpo, sites, left_env, right_env, bond_dim: cfg.bond_dim, mode, lanczos: cfg.lanczos, energy: 0.0, blocks }
    }

    fn block_len(&self) -> usize {
        match self.mode {
            UpdateMode::SingleSite => 1,
            UpdateMode::TwoSite => 2,
        }
    }

    fn theta(&self, j: usize) -> (usize, usize, usize, Vec<C64>) {
        let a = &self.sites[j];
        if self.block_len() == 1 {
            return (a.left(), a.phys(), a.right(), a.data().to_vec());
        }
        let b = &self.sites[j + 1];
        let m = a.to_right_matrix() * b.to_left_matrix();
        let (dl, d1, d2, dr) = (a.left(), a.phys(), b.phys(), b.right());
        let mut v = vec![ZERO; dl * d1 * d2 * dr];
        for x in 0..dl * d1 {
            for y in 0..d2 * dr {
                v[x * d2 * dr + y] = m[(x, y)];
            }
        }
        (dl, d1 * d2, dr, v)
    }

    fn energy_at_start(&mut self) -> f64 {
        let j = 0;
        let (dl, dm, dr, theta) = self.theta(j);
        let mut hv = vec![ZERO; theta.len()];
        let r = &self.right_env[j + self.block_len()];
        apply_block(&self.left_env[j], &self.blocks[j], r, dl, dm, dr, &theta, &mut hv);
        self.energy = rayleigh(&theta, &hv) + self.mpo.shift;
        self.energy
    }

    /// Optimizes the block at `j` and returns the accepted, normalized block.
    fn optimize(&mut self, j: usize) -> (usize, usize, usize, Vec<C64>) {
        let (dl, dm, dr, theta) = self.theta(j);
        let l = &self.left_env[j];
        let r = &self.right_env[j + self.block_len()];
        let w = &self.blocks[j];
        let dim = theta.len();
        let mut hv = vec![ZERO; dim];
        apply_block(l, w, r, dl, dm, dr, &theta, &mut hv);
        let e_old = rayleigh(&theta, &hv);
        let (_, v) = linalg::lowest_eigenpair(dim, |x, y| apply_block(l, w, r, dl, dm, dr, x, y), &theta, &self.lanczos);
        let mut v = v;
        if self.block_len() == 2 {
            v = truncated(&v, dl * 2, dm / 2 * dr, self.bond_dim);
        }
        apply_block(l, w, r, dl, dm, dr, &v, &mut hv);
        let e_new = rayleigh(&v, &hv);
        let (e, mut out) = if e_new <= e_old { (e_new, v) } else { (e_old, theta) };
        let nrm = out.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        out.iter_mut().for_each(|x| *x /= nrm);
        self.energy = e + self.mpo.shift;
        (dl, dm, dr, out)
    }

    fn sweep_right(&mut self) -> f64 {
        let n = self.sites.len();
        let m = self.block_len();
        for j in 0..=n - m {
            let (dl, dm, dr, theta) = self.optimize(j);
            if j == n - m {
                // the last block stays the centre; the left sweep starts here
                self.store(j, dl, dm, dr, &theta, false);
                break;
            }
            self.store(j, dl, dm, dr, &theta, true);
            self.left_env[j + 1] = extend_left(&self.left_env[j], &self.mpo.sites[j], &self.sites[j]);
        }
        self.energy
    }

    fn sweep_left(&mut self) -> f64 {
        let n = self.sites.len();
        let m = self.block_len();
        for j in (0..=n - m).rev() {
            let (dl, dm, dr, theta) = self.optimize(j);
            self.store(j, dl, dm, dr, &theta, false);
            // the site that just became right-normalized
            let k = j + m - 1;
            if k >= 1 {
                self.right_env[k] = extend_right(&self.right_env[k + 1], &self.mpo.sites[k], &self.sites[k]);
            }
        }
        self.energy
    }

    /// Writes an optimized block back. With `centre_right` the centre moves
    /// to the site after the block's first site, otherwise to the block's
    /// first site.
    fn store(&mut self, j: usize, dl: usize, dm: usize, dr: usize, theta: &[C64], centre_right: bool) {
        let n = self.sites.len();
        if self.block_len() == 1 {
            let t = SiteTensor::new(dl, dm, dr, theta.to_vec()).expect("block shape");
            if centre_right && j + 1 < n {
                let dec = linalg::svd(&t.to_right_matrix());
                let k = dec.rank(1e-14).max(1).min(dec.s.len());
                let dec = dec.truncate(k);
                self.sites[j] = SiteTensor::from_right_matrix(&dec.u, dm);
                let sv = DMatrix::from_fn(k, dec.vt.ncols(), |r, c| dec.vt[(r, c)] * dec.s[r]);
                let next = sv * self.sites[j + 1].to_left_matrix();
                self.sites[j + 1] = SiteTensor::from_left_matrix(&next, self.sites[j + 1].phys());
            } else if !centre_right && j > 0 {
                let dec = linalg::svd(&t.to_left_matrix());
                let k = dec.rank(1e-14).max(1).min(dec.s.len());
                let dec = dec.truncate(k);
                self.sites[j] = SiteTensor::from_left_matrix(&dec.vt, dm);
                let us = DMatrix::from_fn(dec.u.nrows(), k, |r, c| dec.u[(r, c)] * dec.s[c]);
                let prev = self.sites[j - 1].to_right_matrix() * us;
                self.sites[j - 1] = SiteTensor::from_right_matrix(&prev, self.sites[j - 1].phys());
            } else {
                self.sites[j] = t;
            }
            return;
        }
        let d1 = self.sites[j].phys();
        let d2 = dm / d1;
        let m = DMatrix::from_row_slice(dl * d1, d2 * dr, theta);
        let dec = linalg::svd(&m);
        let k = dec.rank(1e-13).max(1).min(self.bond_dim);
        let dec = dec.truncate(k);
        let norm = dec.s.iter().map(|x| x * x).sum::<f64>().sqrt();
        if centre_right {
            self.sites[j] = SiteTensor::from_right_matrix(&dec.u, d1);
            let sv = DMatrix::from_fn(k, dec.vt.ncols(), |r, c| dec.vt[(r, c)] * (dec.s[r] / norm));
            self.sites[j + 1] = SiteTensor::from_left_matrix(&sv, d2);
        } else {
            let us = DMatrix::from_fn(dec.u.nrows(), k, |r, c| dec.u[(r, c)] * (dec.s[c] / norm));
            self.sites[j] = SiteTensor::from_right_matrix(&us, d1);
            self.sites[j + 1] = SiteTensor::from_left_matrix(&dec.vt, d2);
        }
    }
}

/// Best rank-`cap` approximation of a `rows × cols` block, renormalized.
fn truncated(v: &[C64], rows: usize, cols: usize, cap: usize) -> Vec<C64> {
    if rows.min(cols) <= cap {
        return v.to_vec();
    }
    let m = DMatrix::from_row_slice(rows, cols, v);
    let dec = linalg::svd(&m).truncate(cap);
    let sd = DMatrix::from_fn(cap, dec.vt.ncols(), |r, c| dec.vt[(r, c)] * dec.s[r]);
    let t = dec.u * sd;
    let mut out = vec![ZERO; rows * cols];
    for r in 0..rows {
        for c in 0..cols {
            out[r * cols + c] = t[(r, c)];
        }
    }
    let nrm = out.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    if nrm > 0.0 {
        out.iter_mut().for_each(|x| *x /= nrm);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pauli::{energy, PauliWord};
    use crate::states::{cluster_parent_hamiltonian, cluster_state, dense_ground_state, ising_hamiltonian, random_nn_hamiltonian};

    #[test]
    fn diagonal_operator_max() {
        let mut h = WindowOperatorSum::zeros(5, 1).unwrap();
        let z: PauliWord = "Z".parse().unwrap();
        for i in 0..5 {
            h.set(i, &z, 1.0);
        }
        let res = extremal_eigenstate(&h, &SweepConfig::new(2, Extremum::Max), None).unwrap();
        assert!((res.eigenvalue - 5.0).abs() < 1e-10);
        let zero = Mps::basis_state(&[0; 5], 2).unwrap();
        assert!((res.state.fidelity(&zero).unwrap() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn ising_ground_energy_matches_dense() {
        let h = ising_hamiltonian(8).unwrap();
        let (e0, _) = dense_ground_state(&h, Extremum::Min).unwrap();
        let res = extremal_eigenstate(&h, &SweepConfig::new(16, Extremum::Min), None).unwrap();
        assert!((res.eigenvalue - e0).abs() < 1e-8, "{} vs {e0}", res.eigenvalue);
        assert!(res.converged);
        assert!((energy(&res.state, &h).unwrap() - res.eigenvalue).abs() < 1e-9);
        assert!(res.state.is_left_canonical(1e-10));
    }

    #[test]
    fn cluster_parent_ground_state() {
        let h = cluster_parent_hamiltonian(7).unwrap();
        let res = extremal_eigenstate(&h, &SweepConfig::new(4, Extremum::Min), None).unwrap();
        assert!(res.eigenvalue.abs() < 1e-8);
        let f = res.state.fidelity(&cluster_state(7).unwrap()).unwrap();
        assert!(f >= 1.0 - 1e-8, "{f}");
    }

    #[test]
    fn trace_is_monotone() {
        for mode in [UpdateMode::TwoSite, UpdateMode::SingleSite] {
            let h = random_nn_hamiltonian(7, 4).unwrap();
            let mut cfg = SweepConfig::new(3, Extremum::Max);
            cfg.mode = mode;
            let res = extremal_eigenstate(&h, &cfg, None).unwrap();
            assert!(res.sweep_trace.windows(2).all(|w| w[1] >= w[0] - 1e-9), "{:?}", res.sweep_trace);
            let (emax, _) = dense_ground_state(&h, Extremum::Max).unwrap();
            assert!(res.eigenvalue <= emax + 1e-9);
        }
    }

    #[test]
    fn warm_start_is_not_worse() {
        let h = ising_hamiltonian(6).unwrap();
        let first = extremal_eigenstate(&h, &SweepConfig::new(8, Extremum::Min), None).unwrap();
        let mut cfg = SweepConfig::new(8, Extremum::Min);
        cfg.max_sweeps = 1;
        let again = extremal_eigenstate(&h, &cfg, Some(&first.state)).unwrap();
        assert!(again.eigenvalue <= first.eigenvalue + 1e-10);
    }

    #[test]
    fn zero_operator_keeps_a_normalized_state() {
        let h = WindowOperatorSum::zeros(4, 2).unwrap();
        let res = extremal_eigenstate(&h, &SweepConfig::new(2, Extremum::Max), None).unwrap();
        assert!(res.eigenvalue.abs() < 1e-12);
        assert!((res.state.norm_sqr() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn rejects_bad_config() {
        let h = ising_hamiltonian(3).unwrap();
        assert!(extremal_eigenstate(&h, &SweepConfig::new(0, Extremum::Min), None).is_err());
    }
}
