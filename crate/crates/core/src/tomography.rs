//! Window-local tomographic datasets.
//!
//! A dataset stores, for every window of `w` consecutive qubits, the Pauli
//! coefficients `p_m = tr[σ P_m]` of the measured window state together with
//! a trace-norm error radius. Noise is modelled as independent Gaussian
//! perturbations of the non-identity coefficients.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::linalg;
use crate::mps::Mps;
use crate::pauli::{expand_density, reassemble, WindowOperatorSum};
use crate::{Error, Result};

/// Provenance of a dataset.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DatasetMetadata {
    pub source: String,
    /// Combined standard deviation of all noise added so far.
    pub noise_sigma: f64,
    /// Seed of the most recent noise draw.
    pub seed: Option<u64>,
    pub parameters: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TomographyDataset {
    n_sites: usize,
    window_size: usize,
    coefficients: Vec<Vec<f64>>,
    epsilons: Vec<f64>,
    pub metadata: DatasetMetadata,
}

impl TomographyDataset {
    /// Validated constructor. Only qubit chains (`d = 2`) are supported.
    pub fn new(
        n_sites: usize,
        window_size: usize,
        coefficients: Vec<Vec<f64>>,
        epsilons: Vec<f64>,
        metadata: DatasetMetadata,
    ) -> Result<Self> {
        if window_size == 0 || window_size > n_sites {
            return Err(Error::Structure(format!("window size {window_size} on {n_sites} sites")));
        }
        let nw = n_sites - window_size + 1;
        if coefficients.len() != nw {
            return Err(Error::Structure(format!("expected {nw} windows, got {}", coefficients.len())));
        }
        if epsilons.len() != nw {
            return Err(Error::Structure(format!("expected {nw} error radii, got {}", epsilons.len())));
        }
        let labels = 1usize << (2 * window_size);
        if let Some(i) = coefficients.iter().position(|c| c.len() != labels) {
            return Err(Error::Structure(format!("window {i} has {} coefficients, expected {labels}", coefficients[i].len())));
        }
        if coefficients.iter().flatten().any(|c| !c.is_finite()) {
            return Err(Error::Structure("non-finite coefficient".into()));
        }
        if let Some(e) = epsilons.iter().find(|e| !(**e >= 0.0) || !e.is_finite()) {
            return Err(Error::Structure(format!("error radius {e} is not a non-negative number")));
        }
        let slack = 1e-8 + 6.0 * metadata.noise_sigma;
        if let Some(i) = coefficients.iter().position(|c| (c[0] - 1.0).abs() > slack) {
            return Err(Error::Structure(format!("window {i} has identity coefficient {}, expected 1", coefficients[i][0])));
        }
        Ok(TomographyDataset { n_sites, window_size, coefficients, epsilons, metadata })
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }
    /// Local dimension; always 2.
    pub fn d(&self) -> usize {
        2
    }
    pub fn window_size(&self) -> usize {
        self.window_size
    }
    pub fn n_windows(&self) -> usize {
        self.coefficients.len()
    }
    pub fn coefficients(&self) -> &[Vec<f64>] {
        &self.coefficients
    }
    pub fn window(&self, i: usize) -> &[f64] {
        &self.coefficients[i]
    }
    pub fn epsilons(&self) -> &[f64] {
        &self.epsilons
    }

    pub fn with_epsilons(mut self, eps: Vec<f64>) -> Result<Self> {
        let md = core::mem::take(&mut self.metadata);
        TomographyDataset::new(self.n_sites, self.window_size, self.coefficients, eps, md)
    }

    /// `σ_i = 2^{-w} Σ_m p_{m,i} P_m`.
    pub fn window_state(&self, i: usize) -> DMatrix<C64> {
        reassemble(self.window_size, &self.coefficients[i])
    }

    /// The coefficients as an operator sum `Σ p_{m,i} P_m^i`.
    pub fn as_operator_sum(&self) -> WindowOperatorSum {
        WindowOperatorSum::from_windows(self.n_sites, self.window_size, self.coefficients.clone())
            .expect("dataset shape is validated")
    }
}

/// Exact window expectations of `target`, with all error radii zero.
pub fn simulate_reductions(target: &Mps, w: usize) -> Result<TomographyDataset> {
    let n = target.n_sites();
    if w == 0 || w > n {
        return Err(Error::InvalidArgument(format!("window size {w} on {n} sites")));
    }
    let coefficients = target
        .window_densities(w)?
        .iter()
        .map(|dm| expand_density(dm).map(|e| e.coeffs))
        .collect::<Result<Vec<_>>>()?;
    let mut metadata = DatasetMetadata { source: String::from("simulated reductions"), ..Default::default() };
    metadata.parameters.insert("window_size".into(), format!("{w}"));
    metadata.parameters.insert("n_sites".into(), format!("{n}"));
    let nw = coefficients.len();
    TomographyDataset::new(n, w, coefficients, alloc::vec![0.0; nw], metadata)
}

/// Adds independent `N(0, σ²)` draws to every non-identity coefficient.
///
/// Draws come from `ChaCha8Rng::seed_from_u64(seed)`, window by window in
/// order of the first site and label by label in lexicographic order. Each
/// radius grows by the trace norm of its window perturbation, so an exact
/// radius stays a valid radius.
pub fn add_noise(ds: &TomographyDataset, sigma: f64, seed: u64) -> Result<TomographyDataset> {
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return Err(Error::InvalidArgument(format!("noise level {sigma} must be a non-negative number")));
    }
    if sigma == 0.0 {
        return Ok(ds.clone());
    }
    let normal = Normal::new(0.0, sigma).map_err(|e| Error::InvalidArgument(format!("{e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w = ds.window_size;
    let mut coefficients = ds.coefficients.clone();
    let mut epsilons = ds.epsilons.clone();
    for (coeffs, eps) in coefficients.iter_mut().zip(epsilons.iter_mut()) {
        let mut delta = alloc::vec![0.0; coeffs.len()];
        for (c, dl) in coeffs.iter_mut().zip(delta.iter_mut()).skip(1) {
            *dl = normal.sample(&mut rng);
            *c += *dl;
        }
        *eps += linalg::trace_norm(&reassemble(w, &delta));
    }
    let mut metadata = ds.metadata.clone();
    metadata.noise_sigma = (metadata.noise_sigma * metadata.noise_sigma + sigma * sigma).sqrt();
    metadata.seed = Some(seed);
    metadata.parameters.insert("noise_sigma".into(), format!("{sigma}"));
    TomographyDataset::new(ds.n_sites, w, coefficients, epsilons, metadata)
}

/// Trace-norm distance between every reassembled window state and the exact
/// reduction of `target`.
pub fn epsilon_against_oracle(ds: &TomographyDataset, target: &Mps) -> Result<Vec<f64>> {
    if target.n_sites() != ds.n_sites {
        return Err(Error::DimensionMismatch(format!("{}-site target for a {}-site dataset", target.n_sites(), ds.n_sites)));
    }
    let exact = target.window_densities(ds.window_size)?;
    Ok(exact
        .iter()
        .enumerate()
        .map(|(i, dm)| linalg::trace_norm(&(ds.window_state(i) - dm.matrix())))
        .collect())
}

/// Sum over windows and non-identity labels of `|p_{m,i} - e_{m,i}|`.
pub fn coefficient_distance(ds: &TomographyDataset, expectations: &[Vec<f64>]) -> f64 {
    ds.coefficients
        .iter()
        .zip(expectations)
        .map(|(p, e)| p.iter().zip(e).skip(1).map(|(a, b)| (a - b).abs()).sum::<f64>())
        .sum()
}
