//! Sequential disentangling circuits.
//!
//! Step `j` looks at the reduced state of sites `j .. j + κ`, rotates its
//! dominant `d^{κ-1}` dimensional eigenspace onto `|0⟩ ⊗ (κ - 1 sites)` and
//! post-selects site `j` on `|0⟩`. The discarded population is recorded as
//! the step's error weight. After the last step the remaining `κ - 1` sites
//! hold a dense state `η`, and undoing the unitaries on `|0…0⟩ ⊗ |η⟩`
//! rebuilds the chain.

use alloc::format;
use alloc::vec::Vec;
use core::cmp::Ordering;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use crate::linalg;
use crate::mps::{Gauge, Mps, SiteTensor};
use crate::{check_dense, Error, Result};

const TIE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct DisentangleCircuit {
    kappa: usize,
    d: usize,
    /// `unitaries[j]` acts on sites `j .. j + κ`.
    unitaries: Vec<DMatrix<C64>>,
    eta: DVector<C64>,
    eps: Vec<f64>,
}

impl DisentangleCircuit {
    /// Validated constructor: every unitary is `d^κ × d^κ` and unitary to
    /// `1e-10`, `η` has `d^{κ-1}` unit-norm entries and every weight lies in
    /// `[0, 1]`.
    pub fn new(kappa: usize, d: usize, unitaries: Vec<DMatrix<C64>>, eta: DVector<C64>, eps: Vec<f64>) -> Result<Self> {
        if kappa < 2 || d < 2 {
            return Err(Error::InvalidArgument(format!("need κ ≥ 2 and d ≥ 2, got κ = {kappa}, d = {d}")));
        }
        if unitaries.is_empty() {
            return Err(Error::Structure("a circuit needs at least one unitary".into()));
        }
        if eps.len() != unitaries.len() {
            return Err(Error::Structure(format!("{} error weights for {} unitaries", eps.len(), unitaries.len())));
        }
        let dim = d.pow(kappa as u32);
        for (j, u) in unitaries.iter().enumerate() {
            if u.shape() != (dim, dim) {
                return Err(Error::Structure(format!("unitary {j} is {}x{}, expected {dim}x{dim}", u.nrows(), u.ncols())));
            }
            let dev = (u.adjoint() * u - DMatrix::<C64>::identity(dim, dim)).camax();
            if !(dev <= 1e-10) {
                return Err(Error::Structure(format!("unitary {j} deviates from unitarity by {dev:e}")));
            }
        }
        if eta.len() != dim / d {
            return Err(Error::Structure(format!("η has {} entries, expected {}", eta.len(), dim / d)));
        }
        if !((eta.norm() - 1.0).abs() <= 1e-10) {
            return Err(Error::Structure(format!("η has norm {}", eta.norm())));
        }
        if let Some(e) = eps.iter().find(|e| !(0.0..=1.0).contains(*e)) {
            return Err(Error::Structure(format!("error weight {e} outside [0, 1]")));
        }
        Ok(DisentangleCircuit { kappa, d, unitaries, eta, eps })
    }

    pub fn kappa(&self) -> usize {
        self.kappa
    }
    pub fn d(&self) -> usize {
        self.d
    }
    pub fn n_sites(&self) -> usize {
        self.unitaries.len() + self.kappa - 1
    }
    pub fn unitaries(&self) -> &[DMatrix<C64>] {
        &self.unitaries
    }
    pub fn eta(&self) -> &DVector<C64> {
        &self.eta
    }
    /// Discarded population of every step.
    pub fn eps(&self) -> &[f64] {
        &self.eps
    }
}

/// Smallest `κ` whose kept space `d^{κ-1}` holds a rank-`rank` reduction.
pub fn choose_kappa(rank: usize, d: usize) -> usize {
    let mut k = 0;
    let mut cap = 1;
    while cap < rank {
        cap *= d;
        k += 1;
    }
    (k + 1).max(2)
}

fn lex_cmp(a: &DVector<C64>, b: &DVector<C64>) -> Ordering {
    for (x, y) in a.iter().zip(b.iter()) {
        let o = x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im));
        if o != Ordering::Equal {
            return o;
        }
    }
    Ordering::Equal
}

/// Removes the global phase: the first entry above `1e-12` becomes real positive.
fn fix_phase(v: &mut DVector<C64>) {
    if let Some(p) = v.iter().find(|z| z.norm() > 1e-12).copied() {
        let ph = p.conj() / p.norm();
        v.iter_mut().for_each(|z| *z *= ph);
    }
}

/// Unitary rotating the top `d^{κ-1}` eigenvectors of a `κ`-site density
/// matrix onto `|0⟩ ⊗ |k⟩`, and the sum of the discarded eigenvalues.
///
/// Eigenvectors are taken by descending eigenvalue; within a degenerate
/// block they are ordered lexicographically after fixing their phase.
pub fn disentangling_unitary(sigma: &DMatrix<C64>, d: usize) -> Result<(DMatrix<C64>, f64)> {
    let dim = sigma.nrows();
    if d < 2 || sigma.ncols() != dim || dim < d * d {
        return Err(Error::DimensionMismatch(format!("{}x{} matrix is not a window of at least two d = {d} sites", dim, sigma.ncols())));
    }
    let mut kappa = 0;
    let mut p = 1;
    while p < dim {
        p *= d;
        kappa += 1;
    }
    if p != dim {
        return Err(Error::DimensionMismatch(format!("dimension {dim} is not a power of {d}")));
    }
    let herm = linalg::hermiticity_error(sigma);
    if herm > 1e-8 {
        return Err(Error::NotHermitian(herm));
    }
    let (vals, vecs) = linalg::eigh(sigma);
    if vals[0] < -1e-8 {
        return Err(Error::NotPsd(vals[0]));
    }
    let mut pairs: Vec<(f64, DVector<C64>)> = vals
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let mut c = vecs.column(i).into_owned();
            fix_phase(&mut c);
            (v, c)
        })
        .collect();
    pairs.sort_by(|a, b| {
        if (a.0 - b.0).abs() <= TIE * (1.0 + a.0.abs()) {
            lex_cmp(&b.1, &a.1)
        } else {
            b.0.total_cmp(&a.0)
        }
    });
    let keep = dim / d;
    let kept: Vec<DVector<C64>> = pairs[..keep].iter().map(|p| p.1.clone()).collect();
    let weight = pairs[keep..].iter().map(|p| p.0.max(0.0)).sum::<f64>().min(1.0);
    let basis = linalg::complete_basis(&DMatrix::from_columns(&kept));
    debug_assert_eq!(basis.ncols(), dim, "basis completion on {kappa} sites");
    Ok((basis.adjoint(), weight))
}

/// Appends a site to a block matrix `(d^t) × D`, giving `(d^{t+1}) × D'`.
fn append_site(block: &DMatrix<C64>, site: &SiteTensor) -> DMatrix<C64> {
    let d = site.phys();
    let right = site.right();
    let prod = block * site.to_left_matrix();
    DMatrix::from_fn(block.nrows() * d, right, |r, b| prod[(r / d, (r % d) * right + b)])
}

/// Splits the last site off a block `(d^t) × D`: returns the remaining
/// block `(d^{t-1}) × r` (singular values absorbed) and a right-normalized
/// site tensor `r × d × D`.
fn split_last(block: &DMatrix<C64>, d: usize) -> (DMatrix<C64>, SiteTensor) {
    let rows = block.nrows() / d;
    let right = block.ncols();
    let m = DMatrix::from_fn(rows, d * right, |p, c| block[(p * d + c / right, c % right)]);
    let dec = linalg::svd(&m);
    let r = dec.rank(1e-14).max(1);
    let dec = dec.truncate(r);
    let site = SiteTensor::from_left_matrix(&dec.vt, d);
    let mut rest = dec.u;
    for (j, s) in dec.s.iter().enumerate() {
        rest.column_mut(j).scale_mut(*s);
    }
    (rest, site)
}

/// Runs the scheme on a simulated state.
pub fn run_disentangle(state: &Mps, kappa: usize) -> Result<DisentangleCircuit> {
    let n = state.n_sites();
    let phys = state.phys_dims();
    let d = phys[0];
    if phys.iter().any(|&p| p != d) {
        return Err(Error::InvalidArgument("the scheme needs a uniform local dimension".into()));
    }
    if kappa < 2 || kappa > n {
        return Err(Error::InvalidArgument(format!("κ = {kappa} on {n} sites; need 2 ≤ κ ≤ N")));
    }
    check_dense(d.pow(kappa as u32))?;
    let psi = state.canonicalize_left()?;
    let sites = psi.sites();
    let mut head = sites[0].to_right_matrix();
    for site in &sites[1..kappa - 1] {
        head = append_site(&head, site);
    }
    let keep = d.pow(kappa as u32 - 1);
    let steps = n - kappa + 1;
    let mut unitaries = Vec::with_capacity(steps);
    let mut eps = Vec::with_capacity(steps);
    for j in 0..steps {
        let theta = append_site(&head, &sites[j + kappa - 1]);
        let sigma = &theta * theta.adjoint();
        let (u, _) = disentangling_unitary(&sigma, d)?;
        let rotated = &u * theta;
        let zero = rotated.rows(0, keep).into_owned();
        let pop = zero.norm_squared();
        if !(pop > 1e-300) {
            return Err(Error::Structure(format!("post-selection at step {j} has zero probability")));
        }
        eps.push((1.0 - pop).clamp(0.0, 1.0));
        head = zero.unscale(pop.sqrt());
        unitaries.push(u);
    }
    let eta = DVector::from_iterator(keep, head.column(0).iter().copied());
    DisentangleCircuit::new(kappa, d, unitaries, eta, eps)
}

/// `U_0† ⋯ U_{L-1}† (|0…0⟩ ⊗ |η⟩)` as an MPS with bonds at most `d^{κ-1}`.
pub fn circuit_to_mps(circuit: &DisentangleCircuit) -> Result<Mps> {
    let d = circuit.d;
    let kappa = circuit.kappa;
    let n = circuit.n_sites();
    let keep = d.pow(kappa as u32 - 1);
    let mut block = DMatrix::from_column_slice(keep, 1, circuit.eta.as_slice());
    let mut tail: Vec<SiteTensor> = Vec::with_capacity(n);
    for (j, u) in circuit.unitaries.iter().enumerate().rev() {
        let theta = u.adjoint().columns(0, keep) * &block;
        let (rest, site) = split_last(&theta, d);
        tail.push(site);
        block = rest;
        if j == 0 {
            for _ in 0..kappa - 2 {
                let (rest, site) = split_last(&block, d);
                tail.push(site);
                block = rest;
            }
        }
    }
    tail.push(SiteTensor::from_right_matrix(&block, d));
    tail.reverse();
    Mps::new(tail, Gauge::LeftCanonical)
}

/// Upper bound on `‖|φ⟩ - |ψ⟩‖` between the rebuilt and the input state.
///
/// A step that discards population `ε` moves the normalized state by
/// exactly `√(2 - 2√(1 - ε))`; the deviations add up along the chain.
pub fn error_bound(circuit: &DisentangleCircuit) -> f64 {
    circuit
        .eps
        .iter()
        .map(|&e| {
            let e = e.clamp(0.0, 1.0);
            (2.0 * e / (1.0 + (1.0 - e).sqrt())).sqrt()
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::{cluster_state, to_dense, w_state};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn deviation(a: &Mps, b: &Mps) -> f64 {
        let va = a.to_dense_vector().unwrap();
        let vb = b.to_dense_vector().unwrap().unscale(b.norm_sqr().sqrt());
        (va - vb).norm()
    }

    #[test]
    fn aligned_pure_state_needs_no_truncation() {
        let mut sigma = DMatrix::zeros(4, 4);
        sigma[(0, 0)] = C64::new(1.0, 0.0);
        let (u, w) = disentangling_unitary(&sigma, 2).unwrap();
        assert_eq!(w, 0.0);
        assert!((u[(0, 0)].norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn maximally_mixed_pair_discards_half() {
        let sigma = DMatrix::<C64>::identity(4, 4).scale(0.25);
        let (u, w) = disentangling_unitary(&sigma, 2).unwrap();
        assert!((w - 0.5).abs() < 1e-12);
        assert!((u.adjoint() * &u - DMatrix::<C64>::identity(4, 4)).camax() < 1e-12);
    }

    #[test]
    fn low_rank_window_is_exact() {
        let w = w_state(3).unwrap();
        let sigma = w.reduced_density(0, 3).unwrap().into_matrix();
        let (u, weight) = disentangling_unitary(&sigma, 2).unwrap();
        assert!(weight < 1e-12);
        let rotated = &u * &sigma * u.adjoint();
        for i in 4..8 {
            assert!(rotated[(i, i)].norm() < 1e-12);
        }
    }

    #[test]
    fn rejects_non_psd_and_bad_shapes() {
        let mut sigma = DMatrix::<C64>::identity(4, 4).scale(0.5);
        sigma[(3, 3)] = C64::new(-0.5, 0.0);
        assert!(matches!(disentangling_unitary(&sigma, 2), Err(Error::NotPsd(_))));
        assert!(disentangling_unitary(&DMatrix::identity(2, 2), 2).is_err());
        assert!(disentangling_unitary(&DMatrix::identity(6, 6), 2).is_err());
    }

    #[test]
    fn kappa_from_rank() {
        assert_eq!(choose_kappa(1, 2), 2);
        assert_eq!(choose_kappa(9, 3), 3);
        assert_eq!(choose_kappa(2, 2), 2);
        assert_eq!(choose_kappa(3, 2), 3);
        assert_eq!(choose_kappa(4, 2), 3);
        assert_eq!(choose_kappa(5, 2), 4);
    }

    #[test]
    fn cluster_and_w_states_are_rebuilt() {
        for target in [cluster_state(6).unwrap(), w_state(6).unwrap()] {
            let c = run_disentangle(&target, 2).unwrap();
            assert_eq!(c.unitaries().len(), 5);
            assert!(c.eps().iter().all(|&e| e <= 1e-10));
            let rebuilt = circuit_to_mps(&c).unwrap();
            assert!(rebuilt.max_bond() <= 2);
            assert!(rebuilt.fidelity(&target).unwrap() >= 1.0 - 1e-8);
        }
    }

    #[test]
    fn identity_circuit_gives_zero_state() {
        let eye = DMatrix::<C64>::identity(4, 4);
        let mut eta = DVector::zeros(2);
        eta[0] = C64::new(1.0, 0.0);
        let c = DisentangleCircuit::new(2, 2, alloc::vec![eye; 3], eta, alloc::vec![0.0; 3]).unwrap();
        let zero = Mps::basis_state(&[0; 4], 2).unwrap();
        assert!((circuit_to_mps(&c).unwrap().fidelity(&zero).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(error_bound(&c), 0.0);
    }

    #[test]
    fn single_step_bound_is_tight() {
        // only the first window of a bond-4 chain of four sites exceeds rank 2
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let psi = Mps::random(&[2; 4], 4, &mut rng).unwrap();
        let c = run_disentangle(&psi, 2).unwrap();
        assert!(c.eps()[1..].iter().all(|&e| e < 1e-12));
        let actual = deviation(&circuit_to_mps(&c).unwrap(), &psi);
        assert!(c.eps()[0] > 1e-6);
        assert!((error_bound(&c) - actual).abs() < 1e-10);
        assert!(c.eps()[0].sqrt() < actual);
    }

    #[test]
    fn under_sized_kappa_is_bounded() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..5 {
            let psi = Mps::random(&[2; 7], 4, &mut rng).unwrap();
            let c = run_disentangle(&psi, 2).unwrap();
            assert!(c.eps().iter().any(|&e| e > 1e-6));
            let actual = deviation(&circuit_to_mps(&c).unwrap(), &psi);
            assert!(actual <= error_bound(&c) + 1e-12);
        }
    }

    #[test]
    fn rebuilt_state_matches_dense_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let psi = Mps::random(&[2; 5], 2, &mut rng).unwrap();
        let rebuilt = circuit_to_mps(&run_disentangle(&psi, 2).unwrap()).unwrap();
        let f = to_dense(&rebuilt).unwrap().fidelity(&to_dense(&psi).unwrap());
        assert!(f >= 1.0 - 1e-10);
    }
}
