//! Target states, model Hamiltonians and the dense brute-force oracle.
//!
//! Random instances use `ChaCha8Rng::seed_from_u64(seed)` from `rand_chacha`,
//! which is portable and bit-reproducible across platforms.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::eigensolver::Extremum;
use crate::mps::{partial_trace, Gauge, Mps, SiteTensor};
use crate::pauli::{pauli_traces, PauliWord, WindowOperatorSum};
use crate::{check_dense, linalg, Error, Result};

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// Normalized dense state vector, first site most significant.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseState {
    n_sites: usize,
    d: usize,
    amplitudes: DVector<C64>,
}

impl DenseState {
    /// Normalizes `amplitudes`; fails on a zero vector or a wrong length.
    pub fn new(n_sites: usize, d: usize, amplitudes: DVector<C64>) -> Result<Self> {
        let dim = d.checked_pow(n_sites as u32).ok_or(Error::DenseLimit { dim: usize::MAX, limit: crate::dense_limit() })?;
        if amplitudes.len() != dim {
            return Err(Error::DimensionMismatch(format!("{} amplitudes for {n_sites} sites of dimension {d}", amplitudes.len())));
        }
        let norm = amplitudes.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::InvalidArgument("zero state vector".into()));
        }
        Ok(DenseState { n_sites, d, amplitudes: amplitudes.unscale(norm) })
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }
    pub fn d(&self) -> usize {
        self.d
    }
    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amplitudes
    }

    pub fn overlap(&self, other: &DenseState) -> C64 {
        self.amplitudes.dotc(&other.amplitudes)
    }

    pub fn fidelity(&self, other: &DenseState) -> f64 {
        self.overlap(other).norm_sqr()
    }

    /// `⟨ψ|m|ψ⟩` for a full-space operator.
    pub fn expectation(&self, m: &DMatrix<C64>) -> C64 {
        self.amplitudes.dotc(&(m * &self.amplitudes))
    }

    pub fn reduced_density(&self, start: usize, len: usize) -> DMatrix<C64> {
        let rho = &self.amplitudes * self.amplitudes.adjoint();
        partial_trace(&rho, &vec![self.d; self.n_sites], start, len)
    }

    pub fn to_mps(&self) -> Result<Mps> {
        Mps::from_dense(self.amplitudes.as_slice(), &vec![self.d; self.n_sites])
    }
}

/// Dense expansion of an MPS.
pub fn to_dense(mps: &Mps) -> Result<DenseState> {
    let d = mps.phys_dims()[0];
    if mps.phys_dims().iter().any(|&x| x != d) {
        return Err(Error::DimensionMismatch("dense states need a uniform local dimension".into()));
    }
    DenseState::new(mps.n_sites(), d, mps.to_dense_vector()?)
}

fn check_min_sites(n: usize, min: usize, what: &str) -> Result<()> {
    if n < min {
        Err(Error::InvalidArgument(format!("{what} needs at least {min} sites, got {n}")))
    } else {
        Ok(())
    }
}

fn chain(first: SiteTensor, bulk: SiteTensor, last: SiteTensor, n: usize) -> Result<Mps> {
    let mut sites = Vec::with_capacity(n);
    sites.push(first);
    for _ in 1..n - 1 {
        sites.push(bulk.clone());
    }
    sites.push(last);
    Mps::new(sites, Gauge::None)?.canonicalize_left()
}

/// `(|10⋯0⟩ + |010⋯0⟩ + ⋯ + |0⋯01⟩)/√N` with bond dimension 2.
pub fn w_state(n: usize) -> Result<Mps> {
    check_min_sites(n, 2, "a W state")?;
    // bond index records whether the excitation has been placed
    let c = C64::new(1.0 / (n as f64).sqrt(), 0.0);
    let first = SiteTensor::new(1, 2, 2, vec![c, ZERO, ZERO, c])?;
    let bulk = SiteTensor::new(2, 2, 2, vec![ONE, ZERO, ZERO, ONE, ZERO, ONE, ZERO, ZERO])?;
    let last = SiteTensor::new(2, 2, 1, vec![ZERO, ONE, ONE, ZERO])?;
    chain(first, bulk, last, n)
}

/// `(|0⋯0⟩ + e^{iφ}|1⋯1⟩)/√2` with bond dimension 2.
pub fn ghz_state(n: usize, phase: f64) -> Result<Mps> {
    check_min_sites(n, 2, "a GHZ state")?;
    let c = C64::new(core::f64::consts::FRAC_1_SQRT_2, 0.0);
    let e = C64::from_polar(core::f64::consts::FRAC_1_SQRT_2, phase);
    let first = SiteTensor::new(1, 2, 2, vec![c, ZERO, ZERO, e])?;
    let bulk = SiteTensor::new(2, 2, 2, vec![ONE, ZERO, ZERO, ZERO, ZERO, ZERO, ZERO, ONE])?;
    let last = SiteTensor::new(2, 2, 1, vec![ONE, ZERO, ZERO, ONE])?;
    chain(first, bulk, last, n)
}

/// Linear cluster state: `|+⟩^{⊗N}` followed by CZ on every neighbouring pair.
pub fn cluster_state(n: usize) -> Result<Mps> {
    check_min_sites(n, 3, "a cluster state")?;
    // amplitude Π (-1)^{s_i s_{i+1}} / 2^{N/2}; the bond carries the previous bit
    let h = C64::new(core::f64::consts::FRAC_1_SQRT_2, 0.0);
    let first = SiteTensor::new(1, 2, 2, vec![h, ZERO, ZERO, h])?;
    let mut bulk = SiteTensor::zeros(2, 2, 2);
    let mut last = SiteTensor::zeros(2, 2, 1);
    for a in 0..2 {
        for s in 0..2 {
            let sign = if a * s == 1 { -h } else { h };
            bulk.set(a, s, s, sign);
            last.set(a, s, 0, sign);
        }
    }
    chain(first, bulk, last, n)
}

/// Stabilizer projector Hamiltonian `Σ_i (1 - K_i)/2` of the linear cluster
/// state, boundary terms `X_1 Z_2` and `Z_{N-1} X_N` included. Window size 3.
pub fn cluster_parent_hamiltonian(n: usize) -> Result<WindowOperatorSum> {
    check_min_sites(n, 3, "the cluster Hamiltonian")?;
    let mut h = WindowOperatorSum::zeros(n, 3)?;
    let id = PauliWord::identity(3);
    for i in 0..n - 2 {
        h.add_to(i, &id, 0.5);
        h.add_to(i, &"ZXZ".parse()?, -0.5);
    }
    h.add_to(0, &id, 0.5);
    h.add_to(0, &"XZI".parse()?, -0.5);
    h.add_to(n - 3, &id, 0.5);
    h.add_to(n - 3, &"IZX".parse()?, -0.5);
    Ok(h)
}

/// Critical transverse-field Ising chain `H = -Σ X_i X_{i+1} - Σ Z_i`, open
/// boundaries, as a window-2 operator sum.
pub fn ising_hamiltonian(n: usize) -> Result<WindowOperatorSum> {
    check_min_sites(n, 2, "the Ising chain")?;
    let mut h = WindowOperatorSum::zeros(n, 2)?;
    let xx: PauliWord = "XX".parse()?;
    let zi: PauliWord = "ZI".parse()?;
    let iz: PauliWord = "IZ".parse()?;
    for i in 0..n - 1 {
        h.add_to(i, &xx, -1.0);
        h.add_to(i, &zi, -1.0);
    }
    h.add_to(n - 2, &iz, -1.0);
    Ok(h)
}

/// Single-site factors `(r_i, r_{i+1})` of every bond of the random
/// nearest-neighbour model. Each factor is `(A + A†)/2` with the real and
/// imaginary parts of `A` drawn uniformly from `[-1, 1]` in row-major order;
/// factors are drawn independently per bond.
pub fn random_nn_factors(n: usize, seed: u64) -> Result<Vec<(DMatrix<C64>, DMatrix<C64>)>> {
    check_min_sites(n, 2, "the random chain")?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draw = |rng: &mut ChaCha8Rng| {
        let mut a = DMatrix::zeros(2, 2);
        for r in 0..2 {
            for c in 0..2 {
                let re = rng.random_range(-1.0..=1.0);
                let im = rng.random_range(-1.0..=1.0);
                a[(r, c)] = C64::new(re, im);
            }
        }
        linalg::hermitian_part(&a)
    };
    Ok((0..n - 1).map(|_| {
        let a = draw(&mut rng);
        let b = draw(&mut rng);
        (a, b)
    }).collect())
}

/// Random nearest-neighbour Hamiltonian `Σ_i r^{(i)}_i ⊗ r^{(i)}_{i+1}`.
pub fn random_nn_hamiltonian(n: usize, seed: u64) -> Result<WindowOperatorSum> {
    let factors = random_nn_factors(n, seed)?;
    let mut h = WindowOperatorSum::zeros(n, 2)?;
    for (i, (a, b)) in factors.iter().enumerate() {
        let term = linalg::kron(a, b);
        for (m, c) in pauli_traces(&term, 2).into_iter().enumerate() {
            h.add_to(i, &PauliWord::from_index(2, m), c.re / 4.0);
        }
    }
    Ok(h)
}

/// Full spectrum (ascending) and eigenvectors of a dense operator sum.
pub fn dense_spectrum(opsum: &WindowOperatorSum) -> Result<(Vec<f64>, DMatrix<C64>)> {
    let m = opsum.to_dense()?;
    Ok(linalg::eigh(&m))
}

/// Extremal eigenpair by full diagonalization.
pub fn dense_ground_state(opsum: &WindowOperatorSum, extremum: Extremum) -> Result<(f64, DenseState)> {
    check_dense(1usize.checked_shl(opsum.n_sites() as u32).unwrap_or(usize::MAX))?;
    let (vals, vecs) = dense_spectrum(opsum)?;
    let idx = match extremum {
        Extremum::Min => 0,
        Extremum::Max => vals.len() - 1,
    };
    let state = DenseState::new(opsum.n_sites(), 2, vecs.column(idx).into_owned())?;
    Ok((vals[idx], state))
}

/// Smallest gap above the lowest eigenvalue, ignoring levels within `tol`
/// of it.
pub fn spectral_gap(values: &[f64], tol: f64) -> Option<f64> {
    let e0 = *values.first()?;
    values.iter().find(|&&v| v - e0 > tol).map(|&v| v - e0)
}
