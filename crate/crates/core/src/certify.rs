//! Parent Hamiltonians and fidelity witnesses.
//!
//! For an MPS and a block length `k`, every window of `2k` sites starting at
//! a multiple of `k` gets the projector onto the orthocomplement of the
//! window states the MPS can produce for arbitrary boundary conditions. When
//! `N` is not a multiple of `k` a last window is anchored at the chain end.
//! The sum of these projectors annihilates the MPS, its gap is bounded from
//! below by the overlaps of neighbouring projectors, and the expectation of
//! the sum in a measured state bounds the fidelity of that state with the
//! MPS.

use alloc::format;
use alloc::vec::Vec;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::linalg;
use crate::mps::{partial_trace, Gauge, Mps, SiteTensor};
use crate::pauli::{pauli_traces, WindowOperatorSum};
use crate::tomography::TomographyDataset;
use crate::{check_dense, Error, Result};

/// Eigenvalues at or below this are treated as zero.
pub const ZERO_EIGENVALUE: f64 = 1e-8;
/// Relative singular-value threshold for the range of a window map.
pub const RANGE_THRESHOLD: f64 = 1e-10;
/// Slack allowed on a string-operator expectation outside `[-1, 1]`.
pub const EXPECTATION_SLACK: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct BlockInjectivity {
    pub start: usize,
    /// Rank of the block's products `M[s_1] ⋯ M[s_k]` as vectors.
    pub rank: usize,
    /// `D_left · D_right`.
    pub required: usize,
}

impl BlockInjectivity {
    pub fn injective(&self) -> bool {
        self.rank == self.required
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InjectivityReport {
    pub k: usize,
    pub blocks: Vec<BlockInjectivity>,
}

impl InjectivityReport {
    pub fn all_injective(&self) -> bool {
        self.blocks.iter().all(BlockInjectivity::injective)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParentHamiltonian {
    k: usize,
    n_sites: usize,
    d: usize,
    starts: Vec<usize>,
    projectors: Vec<DMatrix<C64>>,
    /// `Σ_n ⟨ψ|P_n|ψ⟩` for the source state.
    pub source_energy: f64,
    pub injectivity: InjectivityReport,
}

/// One entry of the pair table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairOverlap {
    pub n: usize,
    pub m: usize,
    pub gamma: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GapCertificate {
    /// `max_n Σ_m γ_{n,m}`.
    pub gamma: f64,
    /// Pairs with overlapping supports, `n < m`. Pairs on disjoint sites
    /// commute and contribute zero.
    pub pairs: Vec<PairOverlap>,
    /// `1 - γ`; not positive means the certificate is vacuous.
    pub bound: f64,
}

impl GapCertificate {
    pub fn is_vacuous(&self) -> bool {
        !(self.bound > 0.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FidelityCertificate {
    /// `tr[P_n σ_n]` with `σ_n` taken from the data.
    pub terms: Vec<f64>,
    /// Error radius charged to each projector.
    pub eps: Vec<f64>,
    /// Dataset window used for each projector.
    pub data_windows: Vec<usize>,
    pub gap: f64,
    /// `1 - Σ_n (ε_n + tr[P_n σ_n]) / gap`, possibly negative.
    pub bound: f64,
    /// Whether every block of the estimate is injective. Otherwise the
    /// ground space may be degenerate and the bound only holds for the
    /// overlap with that space, not for the fidelity with the estimate.
    pub unique_ground_state: bool,
}

impl FidelityCertificate {
    pub fn is_vacuous(&self) -> bool {
        !(self.bound > 0.0)
    }
    /// The bound clamped to `[0, 1]`.
    pub fn reported(&self) -> f64 {
        self.bound.clamp(0.0, 1.0)
    }
}

/// Start sites of windows of `len` sites at stride `k`, plus one anchored
/// at the chain end when the stride does not reach it.
fn window_starts(n: usize, len: usize, k: usize) -> Vec<usize> {
    let mut starts: Vec<usize> = (0..).map(|j| j * k).take_while(|&s| s + len <= n).collect();
    if let Some(&last) = starts.last() {
        if last + len < n {
            starts.push(n - len);
        }
    }
    starts
}

/// Products `M[s_1] ⋯ M[s_len]` of sites `start ..`, one row per string
/// (first site most significant), columns `(a, b)` row-major.
fn block_products(sites: &[SiteTensor], start: usize, len: usize) -> DMatrix<C64> {
    let first = &sites[start];
    let dl = first.left();
    let mut strings: Vec<DMatrix<C64>> = (0..first.phys()).map(|s| first.matrix(s)).collect();
    for site in &sites[start + 1..start + len] {
        let mats: Vec<DMatrix<C64>> = (0..site.phys()).map(|s| site.matrix(s)).collect();
        strings = strings.iter().flat_map(|a| mats.iter().map(move |m| a * m)).collect();
    }
    let dr = strings[0].ncols();
    DMatrix::from_fn(strings.len(), dl * dr, |r, c| strings[r][(c / dr, c % dr)])
}

fn require_canonical(mps: &Mps) -> Result<()> {
    if mps.gauge() != Gauge::LeftCanonical || !mps.is_left_canonical(1e-8) {
        return Err(Error::NotCanonical);
    }
    Ok(())
}

fn uniform_dim(mps: &Mps) -> Result<usize> {
    let phys = mps.phys_dims();
    if phys.iter().any(|&p| p != phys[0]) {
        return Err(Error::InvalidArgument("parent Hamiltonians need a uniform local dimension".into()));
    }
    Ok(phys[0])
}

/// Rank of the block products of every block of `k` sites.
pub fn injectivity_check(mps: &Mps, k: usize) -> Result<InjectivityReport> {
    let n = mps.n_sites();
    if k == 0 || k > n {
        return Err(Error::InvalidArgument(format!("block length {k} on {n} sites")));
    }
    let d = uniform_dim(mps)?;
    check_dense(d.pow(k as u32))?;
    let blocks = window_starts(n, k, k)
        .into_iter()
        .map(|start| {
            let c = block_products(mps.sites(), start, k);
            let required = c.ncols();
            let dec = linalg::svd(&c);
            BlockInjectivity { start, rank: dec.rank(RANGE_THRESHOLD), required }
        })
        .collect();
    Ok(InjectivityReport { k, blocks })
}

/// Parent Hamiltonian with windows of `2k` sites.
pub fn parent_hamiltonian(mps: &Mps, k: usize) -> Result<ParentHamiltonian> {
    require_canonical(mps)?;
    let n = mps.n_sites();
    if k == 0 || 2 * k > n {
        return Err(Error::InvalidArgument(format!("windows of 2k = {} sites on {n} sites", 2 * k)));
    }
    let d = uniform_dim(mps)?;
    let dim = d.pow(2 * k as u32);
    check_dense(dim)?;
    let starts = window_starts(n, 2 * k, k);
    let mut projectors = Vec::with_capacity(starts.len());
    let mut source_energy = 0.0;
    for &a in &starts {
        let range = linalg::range_basis(&block_products(mps.sites(), a, 2 * k), RANGE_THRESHOLD);
        let p = DMatrix::<C64>::identity(dim, dim) - &range * range.adjoint();
        let rho = mps.reduced_density(a, 2 * k)?;
        source_energy += linalg::trace(&(&p * rho.matrix())).re;
        projectors.push(p);
    }
    let injectivity = injectivity_check(mps, k)?;
    Ok(ParentHamiltonian { k, n_sites: n, d, starts, projectors, source_energy, injectivity })
}

impl ParentHamiltonian {
    pub fn k(&self) -> usize {
        self.k
    }
    pub fn n_sites(&self) -> usize {
        self.n_sites
    }
    pub fn d(&self) -> usize {
        self.d
    }
    /// Window length `2k`.
    pub fn window_len(&self) -> usize {
        2 * self.k
    }
    pub fn starts(&self) -> &[usize] {
        &self.starts
    }
    pub fn projectors(&self) -> &[DMatrix<C64>] {
        &self.projectors
    }

    /// Dense `Σ_n P_n` on the whole chain.
    pub fn to_dense(&self) -> Result<DMatrix<C64>> {
        let dim = self.d.checked_pow(self.n_sites as u32).unwrap_or(usize::MAX);
        check_dense(dim)?;
        let mut h = DMatrix::zeros(dim, dim);
        for (p, &a) in self.projectors.iter().zip(&self.starts) {
            h += embed(p, self.d, a, self.window_len(), 0, self.n_sites);
        }
        Ok(h)
    }

    /// The same operator as a Pauli sum on `2k`-site windows (qubits only).
    pub fn to_opsum(&self) -> Result<WindowOperatorSum> {
        if self.d != 2 {
            return Err(Error::DimensionMismatch("Pauli sums are implemented for qubits only".into()));
        }
        let len = self.window_len();
        let mut h = WindowOperatorSum::zeros(self.n_sites, len)?;
        let norm = (1usize << len) as f64;
        let mut windows: Vec<Vec<f64>> = h.windows().to_vec();
        for (p, &a) in self.projectors.iter().zip(&self.starts) {
            for (c, t) in windows[a].iter_mut().zip(pauli_traces(p, len)) {
                *c += t.re / norm;
            }
        }
        h = WindowOperatorSum::from_windows(self.n_sites, len, windows)?;
        Ok(h)
    }
}

/// `I ⊗ p ⊗ I` placing a window of `len` sites starting at `start` inside
/// the interval `lo .. hi`.
fn embed(p: &DMatrix<C64>, d: usize, start: usize, len: usize, lo: usize, hi: usize) -> DMatrix<C64> {
    let left = d.pow((start - lo) as u32);
    let right = d.pow((hi - start - len) as u32);
    let m = linalg::kron(&DMatrix::identity(left, left), p);
    linalg::kron(&m, &DMatrix::identity(right, right))
}

/// Lower bound `1 - γ` on the gap above the ground space.
///
/// `γ_{n,m} = 1 - λ` with `λ` the smallest eigenvalue above
/// [`ZERO_EIGENVALUE`] of `P_n + P_m` on the union of their windows.
pub fn gap_lower_bound(ph: &ParentHamiltonian) -> Result<GapCertificate> {
    let len = ph.window_len();
    let count = ph.projectors.len();
    let mut pairs = Vec::new();
    let mut sums = alloc::vec![0.0; count];
    for n in 0..count {
        for m in n + 1..count {
            let (a, b) = (ph.starts[n], ph.starts[m]);
            if b >= a + len {
                continue;
            }
            let lo = a.min(b);
            let hi = (a + len).max(b + len);
            check_dense(ph.d.pow((hi - lo) as u32))?;
            let sum = embed(&ph.projectors[n], ph.d, a, len, lo, hi) + embed(&ph.projectors[m], ph.d, b, len, lo, hi);
            let gamma = match linalg::eigvalsh(&sum).into_iter().find(|&v| v > ZERO_EIGENVALUE) {
                Some(v) => (1.0 - v).clamp(0.0, 1.0),
                None => 0.0,
            };
            sums[n] += gamma;
            sums[m] += gamma;
            pairs.push(PairOverlap { n, m, gamma });
        }
    }
    let gamma = sums.iter().copied().fold(0.0, f64::max);
    Ok(GapCertificate { gamma, pairs, bound: 1.0 - gamma })
}

/// Fidelity lower bound from window data with trace-norm radii `eps`
/// (one per dataset window).
///
/// Each projector is evaluated on the first dataset window that contains
/// it, reduced to the projector's sites; that window's radius is charged.
pub fn fidelity_bound(
    ph: &ParentHamiltonian,
    gap: &GapCertificate,
    ds: &TomographyDataset,
    eps: &[f64],
) -> Result<FidelityCertificate> {
    let len = ph.window_len();
    if ds.window_size() < len {
        return Err(Error::InsufficientSupport { have: ds.window_size(), need: len });
    }
    if ds.n_sites() != ph.n_sites || ph.d != ds.d() {
        return Err(Error::DimensionMismatch(format!(
            "{}-site dataset for a {}-site Hamiltonian",
            ds.n_sites(),
            ph.n_sites
        )));
    }
    if eps.len() != ds.n_windows() {
        return Err(Error::DimensionMismatch(format!("{} radii for {} windows", eps.len(), ds.n_windows())));
    }
    if let Some(e) = eps.iter().find(|e| !(**e >= 0.0) || !e.is_finite()) {
        return Err(Error::InvalidArgument(format!("error radius {e} is not a non-negative number")));
    }
    if gap.is_vacuous() {
        return Err(Error::VacuousGap(gap.bound));
    }
    let w = ds.window_size();
    let phys = alloc::vec![ph.d; w];
    let mut terms = Vec::with_capacity(ph.projectors.len());
    let mut charged = Vec::with_capacity(ph.projectors.len());
    let mut data_windows = Vec::with_capacity(ph.projectors.len());
    for (p, &a) in ph.projectors.iter().zip(&ph.starts) {
        let i = a.min(ds.n_windows() - 1);
        let sigma = partial_trace(&ds.window_state(i), &phys, a - i, len);
        terms.push(linalg::trace(&(p * sigma)).re);
        charged.push(eps[i]);
        data_windows.push(i);
    }
    let energy: f64 = terms.iter().sum::<f64>() + charged.iter().sum::<f64>();
    Ok(FidelityCertificate {
        terms,
        eps: charged,
        data_windows,
        gap: gap.bound,
        bound: 1.0 - energy / gap.bound,
        unique_ground_state: ph.injectivity.all_injective(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseEstimate {
    /// Relative phase in `[0, π]`.
    pub phase: f64,
    pub expectation: f64,
    /// Certified overlap of the measured state with the two-dimensional
    /// ground space the phase refers to.
    pub overlap_bound: f64,
}

/// Relative phase of a GHZ-type state from the expectation `cos φ` of the
/// all-`X` string.
pub fn ghz_phase_certify(string_expectation: f64, overlap_bound: f64) -> Result<PhaseEstimate> {
    if !(string_expectation.abs() <= 1.0 + EXPECTATION_SLACK) {
        return Err(Error::ExpectationOutOfRange(string_expectation));
    }
    let c = string_expectation.clamp(-1.0, 1.0);
    Ok(PhaseEstimate { phase: c.acos(), expectation: string_expectation, overlap_bound })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pauli::{energy, string_expectation, PauliWord};
    use crate::states::{cluster_state, dense_spectrum, ghz_state, spectral_gap, to_dense, w_state};
    use crate::tomography::simulate_reductions;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn check_projectors(ph: &ParentHamiltonian) {
        for p in ph.projectors() {
            assert!((p * p - p).camax() < 1e-10);
            assert!(linalg::hermiticity_error(p) < 1e-12);
        }
    }

    #[test]
    fn window_layout() {
        assert_eq!(window_starts(8, 4, 2), alloc::vec![0, 2, 4]);
        assert_eq!(window_starts(7, 4, 2), alloc::vec![0, 2, 3]);
        assert_eq!(window_starts(4, 2, 1), alloc::vec![0, 1, 2]);
    }

    #[test]
    fn product_state_parent() {
        let psi = Mps::basis_state(&[0; 4], 2).unwrap().canonicalize_left().unwrap();
        let ph = parent_hamiltonian(&psi, 1).unwrap();
        let mut expected = DMatrix::<C64>::identity(4, 4);
        expected[(0, 0)] = C64::new(0.0, 0.0);
        for p in ph.projectors() {
            assert!((p - &expected).camax() < 1e-12);
        }
        let cert = gap_lower_bound(&ph).unwrap();
        assert!(cert.pairs.iter().all(|p| p.gamma.abs() < 1e-12));
        assert!((cert.bound - 1.0).abs() < 1e-12);
        let (vals, _) = dense_spectrum(&ph.to_opsum().unwrap()).unwrap();
        assert!((spectral_gap(&vals, 1e-9).unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn cluster_parent_has_unit_gap() {
        let psi = cluster_state(8).unwrap();
        let ph = parent_hamiltonian(&psi, 2).unwrap();
        check_projectors(&ph);
        assert!(ph.source_energy.abs() < 1e-10);
        assert!(ph.injectivity.all_injective());
        let vals = linalg::eigvalsh(&ph.to_dense().unwrap());
        assert!(vals[0].abs() < 1e-9 && vals[1] > 1e-6);
        assert!((spectral_gap(&vals, 1e-9).unwrap() - 1.0).abs() < 1e-9);
        let cert = gap_lower_bound(&ph).unwrap();
        assert!(cert.bound > 0.0 && cert.bound <= 1.0 + 1e-12);
    }

    #[test]
    fn opsum_matches_dense_sum() {
        let psi = cluster_state(6).unwrap();
        let ph = parent_hamiltonian(&psi, 2).unwrap();
        let a = ph.to_dense().unwrap();
        let b = ph.to_opsum().unwrap().to_dense().unwrap();
        assert!((a - b).camax() < 1e-10);
        assert!(energy(&psi, &ph.to_opsum().unwrap()).unwrap().abs() < 1e-10);
    }

    #[test]
    fn exact_data_gives_unit_fidelity_bound() {
        let psi = cluster_state(8).unwrap();
        let ph = parent_hamiltonian(&psi, 2).unwrap();
        let gap = gap_lower_bound(&ph).unwrap();
        let ds = simulate_reductions(&psi, 4).unwrap();
        let cert = fidelity_bound(&ph, &gap, &ds, ds.epsilons()).unwrap();
        assert!(cert.bound >= 1.0 - 1e-6);
        let eps = alloc::vec![0.01; ds.n_windows()];
        let cert = fidelity_bound(&ph, &gap, &ds, &eps).unwrap();
        let expected = 1.0 - 0.01 * ph.projectors().len() as f64 / gap.bound;
        assert!((cert.bound - expected).abs() < 1e-8);
    }

    #[test]
    fn short_windows_are_rejected() {
        let psi = cluster_state(6).unwrap();
        let ph = parent_hamiltonian(&psi, 2).unwrap();
        let gap = gap_lower_bound(&ph).unwrap();
        let ds = simulate_reductions(&psi, 3).unwrap();
        let err = fidelity_bound(&ph, &gap, &ds, ds.epsilons()).unwrap_err();
        assert_eq!(err, Error::InsufficientSupport { have: 3, need: 4 });
    }

    #[test]
    fn non_canonical_input_is_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let psi = Mps::random(&[2; 4], 2, &mut rng).unwrap();
        let raw = Mps::new(psi.sites().to_vec(), Gauge::None).unwrap();
        assert_eq!(parent_hamiltonian(&raw, 1).unwrap_err(), Error::NotCanonical);
    }

    #[test]
    fn injectivity_examples() {
        let ghz = ghz_state(6, 0.0).unwrap();
        assert!(!injectivity_check(&ghz, 2).unwrap().all_injective());
        let zero = Mps::basis_state(&[0; 5], 2).unwrap();
        assert!(injectivity_check(&zero, 2).unwrap().all_injective());
        assert!(injectivity_check(&w_state(4).unwrap(), 2).unwrap().all_injective());
        // W blocks only span {1, σ⁺}: products of two σ⁺ vanish
        let report = injectivity_check(&w_state(8).unwrap(), 2).unwrap();
        assert!(report.blocks.iter().any(|b| b.rank == 2 && b.required == 4));
    }

    #[test]
    fn ghz_ground_space_is_two_dimensional() {
        let ghz = ghz_state(6, 0.7).unwrap();
        let ph = parent_hamiltonian(&ghz, 1).unwrap();
        let vals = linalg::eigvalsh(&ph.to_dense().unwrap());
        assert!(vals[1].abs() < 1e-9 && vals[2] > 1e-3);
        let all_zero = to_dense(&Mps::basis_state(&[0; 6], 2).unwrap()).unwrap();
        let all_one = to_dense(&Mps::basis_state(&[1; 6], 2).unwrap()).unwrap();
        let h = ph.to_dense().unwrap();
        assert!((&h * all_zero.amplitudes()).norm() < 1e-9);
        assert!((&h * all_one.amplitudes()).norm() < 1e-9);
    }

    #[test]
    fn ghz_phase_from_string() {
        assert_eq!(ghz_phase_certify(1.0, 1.0).unwrap().phase, 0.0);
        assert!((ghz_phase_certify(-1.0, 1.0).unwrap().phase - core::f64::consts::PI).abs() < 1e-12);
        assert!(ghz_phase_certify(1.1, 1.0).is_err());
        let phi = core::f64::consts::FRAC_PI_3;
        let ghz = ghz_state(5, phi).unwrap();
        let x: PauliWord = "XXXXX".parse().unwrap();
        let e = string_expectation(&ghz, &x).unwrap();
        assert!((e - 0.5).abs() < 1e-12);
        assert!((ghz_phase_certify(e, 1.0).unwrap().phase - phi).abs() < 1e-9);
    }

    #[test]
    fn gap_bound_below_dense_gap_for_random_states() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for n in [6, 7] {
            let psi = Mps::random(&alloc::vec![2; n], 2, &mut rng).unwrap().canonicalize_left().unwrap();
            let ph = parent_hamiltonian(&psi, 2).unwrap();
            check_projectors(&ph);
            assert!(ph.source_energy.abs() < 1e-10);
            let cert = gap_lower_bound(&ph).unwrap();
            let vals = linalg::eigvalsh(&ph.to_dense().unwrap());
            let gap = spectral_gap(&vals, 1e-9).unwrap();
            assert!(cert.bound <= gap + 1e-10);
        }
    }
}
