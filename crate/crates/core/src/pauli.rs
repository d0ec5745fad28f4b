//! Window-local Pauli bases and operator sums.
//!
//! A window of `k` qubits carries the `4^k` Pauli words, enumerated
//! lexicographically with `I < X < Y < Z` and the first site most
//! significant, so index 0 is the identity word. Every operator handled by
//! the reconstruction code is a [`WindowOperatorSum`]: real coefficients on
//! the words of each sliding window.
//!
//! Coefficients are stored without any global `2^{-N}` factor. A dataset
//! coefficient is exactly `tr[σ_i P_m]`, so a window density is recovered as
//! `σ_i = 2^{-k} Σ_m tr[σ_i P_m] P_m`.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::mps::{DensityMatrix, Mps};
use crate::{check_dense, linalg, Error, Result};

const ONE: C64 = C64::new(1.0, 0.0);
const I_UNIT: C64 = C64::new(0.0, 1.0);

/// Single-qubit Pauli operator, with `Z|0⟩ = |0⟩`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub const ALL: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Pauli {
        Pauli::ALL[i & 3]
    }

    pub fn as_char(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }

    /// Image of a basis state: `P|b⟩ = phase · |b'⟩`.
    #[inline]
    pub fn act(self, bit: usize) -> (usize, C64) {
        match self {
            Pauli::I => (bit, ONE),
            Pauli::X => (bit ^ 1, ONE),
            Pauli::Y => (bit ^ 1, if bit == 0 { I_UNIT } else { -I_UNIT }),
            Pauli::Z => (bit, if bit == 0 { ONE } else { -ONE }),
        }
    }

    pub fn matrix(self) -> DMatrix<C64> {
        let mut m = DMatrix::zeros(2, 2);
        for b in 0..2 {
            let (img, ph) = self.act(b);
            m[(img, b)] = ph;
        }
        m
    }
}

/// A word over `{I, X, Y, Z}`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PauliWord(Vec<Pauli>);

impl PauliWord {
    pub fn new(ops: Vec<Pauli>) -> Self {
        PauliWord(ops)
    }

    pub fn identity(k: usize) -> Self {
        PauliWord(vec![Pauli::I; k])
    }

    /// Word at position `index` of the lexicographic enumeration.
    pub fn from_index(k: usize, index: usize) -> Self {
        PauliWord((0..k).map(|j| Pauli::from_index(index >> (2 * (k - 1 - j)))).collect())
    }

    pub fn index(&self) -> usize {
        self.0.iter().fold(0, |acc, p| acc * 4 + p.index())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn ops(&self) -> &[Pauli] {
        &self.0
    }

    pub fn is_identity(&self) -> bool {
        self.0.iter().all(|&p| p == Pauli::I)
    }

    /// `P|x⟩ = phase · |x'⟩` on a `len`-qubit basis index.
    pub fn act(&self, x: usize) -> (usize, C64) {
        let k = self.0.len();
        let mut out = 0;
        let mut phase = ONE;
        for (j, p) in self.0.iter().enumerate() {
            let bit = (x >> (k - 1 - j)) & 1;
            let (b, ph) = p.act(bit);
            out |= b << (k - 1 - j);
            phase *= ph;
        }
        (out, phase)
    }

    pub fn matrix(&self) -> DMatrix<C64> {
        let dim = 1usize << self.0.len();
        let mut m = DMatrix::zeros(dim, dim);
        for x in 0..dim {
            let (y, ph) = self.act(x);
            m[(y, x)] = ph;
        }
        m
    }
}

impl fmt::Display for PauliWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for p in &self.0 {
            write!(f, "{}", p.as_char())?;
        }
        Ok(())
    }
}

impl FromStr for PauliWord {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| match c {
                'I' => Ok(Pauli::I),
                'X' => Ok(Pauli::X),
                'Y' => Ok(Pauli::Y),
                'Z' => Ok(Pauli::Z),
                other => Err(Error::InvalidArgument(format!("invalid Pauli character {other:?}"))),
            })
            .collect::<Result<Vec<_>>>()
            .map(PauliWord)
    }
}

/// A Pauli word anchored at the first site of its window.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PauliLabel {
    pub window_start: usize,
    pub word: PauliWord,
}

impl fmt::Display for PauliLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}@{}", self.word, self.window_start)
    }
}

/// All `4^k` words of a `k`-site window in lexicographic order.
pub fn enumerate_window_basis(k: usize) -> Vec<PauliWord> {
    (0..1usize << (2 * k)).map(|i| PauliWord::from_index(k, i)).collect()
}

/// `tr[m P]` for every word of a `k`-qubit window, in enumeration order.
pub fn pauli_traces(m: &DMatrix<C64>, k: usize) -> Vec<C64> {
    let dim = 1usize << k;
    let words = enumerate_window_basis(k);
    words
        .iter()
        .map(|w| {
            // tr[m P] = Σ_x ⟨x|m P|x⟩ = Σ_x phase_x m[x, P(x)]
            (0..dim)
                .map(|x| {
                    let (y, ph) = w.act(x);
                    m[(x, y)] * ph
                })
                .sum()
        })
        .collect()
}

/// Expansion coefficients `tr[σ P_m]` of a window density in the Pauli basis.
#[derive(Debug, Clone, PartialEq)]
pub struct PauliExpansion {
    pub window_start: usize,
    pub window_size: usize,
    pub coeffs: Vec<f64>,
}

impl PauliExpansion {
    pub fn iter(&self) -> impl Iterator<Item = (PauliLabel, f64)> + '_ {
        self.coeffs.iter().enumerate().map(move |(i, &c)| {
            (PauliLabel { window_start: self.window_start, word: PauliWord::from_index(self.window_size, i) }, c)
        })
    }

    pub fn get(&self, word: &PauliWord) -> f64 {
        self.coeffs[word.index()]
    }
}

/// Expands a Hermitian window matrix. Fails when the input is not Hermitian
/// within 1e-10 or is not a qubit window.
pub fn expand_matrix(m: &DMatrix<C64>, window_start: usize) -> Result<PauliExpansion> {
    let dim = m.nrows();
    if m.ncols() != dim || !dim.is_power_of_two() || dim == 0 {
        return Err(Error::DimensionMismatch(format!("{}x{} is not a qubit window operator", m.nrows(), m.ncols())));
    }
    let herr = linalg::hermiticity_error(m);
    if herr > 1e-10 {
        return Err(Error::NotHermitian(herr));
    }
    let k = dim.trailing_zeros() as usize;
    let coeffs = pauli_traces(m, k).into_iter().map(|c| c.re).collect();
    Ok(PauliExpansion { window_start, window_size: k, coeffs })
}

pub fn expand_density(dm: &DensityMatrix) -> Result<PauliExpansion> {
    if dm.phys_dims().iter().any(|&d| d != 2) {
        return Err(Error::DimensionMismatch("Pauli bases are implemented for qubits only".into()));
    }
    expand_matrix(dm.matrix(), dm.start())
}

/// `2^{-k} Σ_m c_m P_m`.
pub fn reassemble(k: usize, coeffs: &[f64]) -> DMatrix<C64> {
    let dim = 1usize << k;
    let mut m = DMatrix::zeros(dim, dim);
    for (i, &c) in coeffs.iter().enumerate() {
        if c == 0.0 {
            continue;
        }
        let w = PauliWord::from_index(k, i);
        for x in 0..dim {
            let (y, ph) = w.act(x);
            m[(y, x)] += ph * c;
        }
    }
    m.unscale(dim as f64)
}

/// `Σ_m c_m P_m` on one window (no normalization).
pub fn window_operator(k: usize, coeffs: &[f64]) -> DMatrix<C64> {
    reassemble(k, coeffs).scale((1usize << k) as f64)
}

/// Real coefficients on the Pauli words of every `k`-site window of an
/// `N`-site qubit chain. Window `i` covers sites `i .. i + k`.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowOperatorSum {
    n_sites: usize,
    window_size: usize,
    windows: Vec<Vec<f64>>,
}

impl WindowOperatorSum {
    pub fn zeros(n_sites: usize, window_size: usize) -> Result<Self> {
        if window_size == 0 || window_size > n_sites {
            return Err(Error::InvalidArgument(format!("window size {window_size} on {n_sites} sites")));
        }
        let nw = n_sites - window_size + 1;
        Ok(WindowOperatorSum { n_sites, window_size, windows: vec![vec![0.0; 1 << (2 * window_size)]; nw] })
    }

    pub fn from_windows(n_sites: usize, window_size: usize, windows: Vec<Vec<f64>>) -> Result<Self> {
        let z = WindowOperatorSum::zeros(n_sites, window_size)?;
        if windows.len() != z.windows.len() {
            return Err(Error::Structure(format!("expected {} windows, got {}", z.windows.len(), windows.len())));
        }
        if windows.iter().any(|w| w.len() != 1 << (2 * window_size)) {
            return Err(Error::Structure(format!("every window needs {} coefficients", 1usize << (2 * window_size))));
        }
        Ok(WindowOperatorSum { n_sites, window_size, windows })
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }
    pub fn window_size(&self) -> usize {
        self.window_size
    }
    pub fn n_windows(&self) -> usize {
        self.windows.len()
    }
    pub fn windows(&self) -> &[Vec<f64>] {
        &self.windows
    }
    pub fn window(&self, i: usize) -> &[f64] {
        &self.windows[i]
    }

    pub fn get(&self, window: usize, word: &PauliWord) -> f64 {
        self.windows[window][word.index()]
    }

    pub fn set(&mut self, window: usize, word: &PauliWord, value: f64) {
        self.windows[window][word.index()] = value;
    }

    pub fn add_to(&mut self, window: usize, word: &PauliWord, value: f64) {
        self.windows[window][word.index()] += value;
    }

    fn check_same_shape(&self, other: &Self) -> Result<()> {
        if self.n_sites != other.n_sites || self.window_size != other.window_size {
            return Err(Error::DimensionMismatch(format!(
                "operator sums on ({}, k={}) and ({}, k={})",
                self.n_sites, self.window_size, other.n_sites, other.window_size
            )));
        }
        Ok(())
    }

    /// `self + alpha · other`.
    pub fn axpy(&self, alpha: f64, other: &Self) -> Result<Self> {
        self.check_same_shape(other)?;
        let mut out = self.clone();
        for (a, b) in out.windows.iter_mut().zip(&other.windows) {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += alpha * y);
        }
        Ok(out)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.axpy(1.0, other)
    }

    pub fn scale(&self, alpha: f64) -> Self {
        let mut out = self.clone();
        out.windows.iter_mut().flatten().for_each(|x| *x *= alpha);
        out
    }

    /// Sum of all identity-word coefficients; the operator's constant shift.
    pub fn identity_total(&self) -> f64 {
        self.windows.iter().map(|w| w[0]).sum()
    }

    /// Largest absolute coefficient difference.
    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        self.check_same_shape(other)?;
        Ok(self
            .windows
            .iter()
            .flatten()
            .zip(other.windows.iter().flatten())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }

    /// Nonzero terms as `(label, coefficient)` in window then word order.
    pub fn terms(&self) -> impl Iterator<Item = (PauliLabel, f64)> + '_ {
        let k = self.window_size;
        self.windows.iter().enumerate().flat_map(move |(i, w)| {
            w.iter().enumerate().filter(|(_, &c)| c != 0.0).map(move |(m, &c)| {
                (PauliLabel { window_start: i, word: PauliWord::from_index(k, m) }, c)
            })
        })
    }

    /// Dense `Σ_{i,m} c_{i,m} P_m^{(i)}` on the full chain.
    pub fn to_dense(&self) -> Result<DMatrix<C64>> {
        let n = self.n_sites;
        if n >= usize::BITS as usize - 1 {
            return Err(Error::DenseLimit { dim: usize::MAX, limit: crate::dense_limit() });
        }
        let dim = 1usize << n;
        check_dense(dim)?;
        let k = self.window_size;
        let mut m = DMatrix::zeros(dim, dim);
        for (i, w) in self.windows.iter().enumerate() {
            let shift = n - i - k;
            let wmask = ((1usize << k) - 1) << shift;
            for (idx, &c) in w.iter().enumerate() {
                if c == 0.0 {
                    continue;
                }
                let word = PauliWord::from_index(k, idx);
                for x in 0..dim {
                    let (y, ph) = word.act((x & wmask) >> shift);
                    let target = (x & !wmask) | (y << shift);
                    m[(target, x)] += ph * c;
                }
            }
        }
        Ok(m)
    }
}

/// Dense matrix of an operator sum; fails above the dense limit.
pub fn apply_opsum_dense(opsum: &WindowOperatorSum) -> Result<DMatrix<C64>> {
    opsum.to_dense()
}

/// Expectations `⟨ψ|P_m|ψ⟩` of every word on every `k`-site window, from
/// the window reductions of `mps`.
pub fn window_expectations(mps: &Mps, k: usize) -> Result<Vec<Vec<f64>>> {
    if mps.phys_dims().iter().any(|&d| d != 2) {
        return Err(Error::DimensionMismatch("Pauli bases are implemented for qubits only".into()));
    }
    Ok(mps
        .window_densities(k)?
        .iter()
        .map(|dm| pauli_traces(dm.matrix(), k).into_iter().map(|c| c.re).collect())
        .collect())
}

/// Expectations of every term present in `opsum`.
pub fn expectations(mps: &Mps, opsum: &WindowOperatorSum) -> Result<BTreeMap<PauliLabel, f64>> {
    if mps.n_sites() != opsum.n_sites() {
        return Err(Error::DimensionMismatch(format!("{}-site state and {}-site operator", mps.n_sites(), opsum.n_sites())));
    }
    let table = window_expectations(mps, opsum.window_size())?;
    Ok(opsum.terms().map(|(label, _)| {
        let v = table[label.window_start][label.word.index()];
        (label, v)
    }).collect())
}

/// `⟨ψ|Op|ψ⟩` for an operator sum, by window reductions.
pub fn energy(mps: &Mps, opsum: &WindowOperatorSum) -> Result<f64> {
    if mps.n_sites() != opsum.n_sites() {
        return Err(Error::DimensionMismatch(format!("{}-site state and {}-site operator", mps.n_sites(), opsum.n_sites())));
    }
    let table = window_expectations(mps, opsum.window_size())?;
    Ok(table
        .iter()
        .zip(opsum.windows())
        .map(|(e, c)| e.iter().zip(c).map(|(a, b)| a * b).sum::<f64>())
        .sum())
}

/// Expectation of a full-length Pauli string via transfer matrices.
pub fn string_expectation(mps: &Mps, word: &PauliWord) -> Result<f64> {
    let ops: Vec<DMatrix<C64>> = word.ops().iter().map(|p| p.matrix()).collect();
    Ok(mps.product_expectation(&ops)?.re)
}

/// Parses a compact label like `"ZXZ@2"`.
impl FromStr for PauliLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (w, i) = s.split_once('@').ok_or_else(|| Error::InvalidArgument(format!("label {s:?} lacks '@start'")))?;
        let window_start = i.parse().map_err(|_| Error::InvalidArgument(format!("bad window start in {s:?}")))?;
        Ok(PauliLabel { window_start, word: w.parse()? })
    }
}
