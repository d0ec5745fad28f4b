//! Singular value thresholding restricted to window-local operators.
//!
//! The iterate `Y` is a [`WindowOperatorSum`] with coefficients on the
//! Pauli words of the data windows. Each step finds the top eigenvector
//! `|y⟩` of `Y` variationally, forms `X = y ⟨y|P|y⟩` on every word and
//! moves `Y ← Y + δ (R - X)`, where `R` holds the measured coefficients.
//! Both `R` and `X` carry identity terms, so the top eigenvalue is driven
//! towards one; the reported iterate is the one whose expectations are
//! closest to the data.
//!
//! Coefficients are stored without a global `2^{-N}` factor. Relative to
//! a normalized operator this only rescales `Y`, so a step size `δ` here
//! corresponds to `δ / 2^N` there.

use alloc::format;
use alloc::vec::Vec;

use crate::eigensolver::{extremal_eigenstate, Extremum, SweepConfig};
use crate::mps::Mps;
use crate::pauli::{window_expectations, WindowOperatorSum};
use crate::tomography::{coefficient_distance, TomographyDataset};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum StepSchedule {
    Constant(f64),
    /// Step `n` uses entry `n - 1`; the last entry repeats.
    Sequence(Vec<f64>),
}

impl StepSchedule {
    pub fn step(&self, n: usize) -> f64 {
        match self {
            StepSchedule::Constant(d) => *d,
            StepSchedule::Sequence(v) => v[(n.max(1) - 1).min(v.len() - 1)],
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match self {
            StepSchedule::Constant(d) => *d > 0.0 && d.is_finite(),
            StepSchedule::Sequence(v) => !v.is_empty() && v.iter().all(|d| *d > 0.0 && d.is_finite()),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument("step sizes must be positive and finite".into()))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Init {
    Zero,
    /// Start from `Y_0 = R`.
    Data,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SvtConfig {
    pub n_iters: usize,
    pub step: StepSchedule,
    pub init: Init,
    /// Bond dimension, extremum and sweep budget of every eigensolve. The
    /// extremum is forced to `Max`.
    pub sweep: SweepConfig,
    /// Every `record_stride`-th iteration is stored in the trace.
    pub record_stride: usize,
    /// Every this many iterations the warm-started solve is compared with a
    /// solve from a fresh random state and the higher eigenvalue wins. Warm
    /// starts alone cannot leave a symmetry sector of `Y`. Zero disables.
    pub restart_every: usize,
    /// Sweep budget of those fresh solves.
    pub restart_sweeps: usize,
}

/// Default constant step for an `n_sites` chain. The top eigenvector reacts
/// to `δ` with a gain that grows with the number of windows, and steps much
/// above `1 / N²` oscillate instead of converging.
pub fn default_step(n_sites: usize) -> f64 {
    let n = n_sites.max(1) as f64;
    0.03 / (n * n)
}

impl SvtConfig {
    /// One warm-started sweep per iteration with a small Krylov space; `Y`
    /// moves by `O(δ)` per step, so tighter solves only cost time.
    pub fn new(bond_dim: usize, n_iters: usize, delta: f64) -> Self {
        let mut sweep = SweepConfig::new(bond_dim, Extremum::Max);
        sweep.max_sweeps = 1;
        sweep.tol = 1e-9;
        sweep.lanczos.dense_threshold = 4;
        sweep.lanczos.krylov_dim = 6;
        sweep.lanczos.max_restarts = 1;
        SvtConfig {
            n_iters,
            step: StepSchedule::Constant(delta),
            init: Init::Zero,
            sweep,
            record_stride: 1,
            restart_every: 20,
            restart_sweeps: 4,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n_iters == 0 {
            return Err(Error::InvalidArgument("at least one iteration is required".into()));
        }
        if self.record_stride == 0 {
            return Err(Error::InvalidArgument("record stride must be at least 1".into()));
        }
        self.step.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceEntry {
    pub iteration: usize,
    /// Top eigenvalue `y_n` of the iterate.
    pub eigenvalue: f64,
    /// Distance `x_n` of the eigenvector's expectations to the data.
    pub merit: f64,
    /// `|⟨φ|y_n⟩|²` when a reference state was supplied.
    pub fidelity: Option<f64>,
    pub converged: bool,
}

#[derive(Debug, Clone)]
pub struct ReconstructionResult {
    pub best_state: Mps,
    pub best_iteration: usize,
    pub best_merit: f64,
    pub best_fidelity: Option<f64>,
    pub trace: Vec<TraceEntry>,
    pub final_y: WindowOperatorSum,
    /// Number of eigensolves that hit the sweep budget before converging.
    /// The one-sweep default budget rarely settles to the sweep tolerance,
    /// so this is close to `n_iters` unless `sweep.max_sweeps` is raised.
    pub unconverged_solves: usize,
}

/// The data operator `R = Σ p_{m,i} P_m^i`, identity terms included.
pub fn build_r(ds: &TomographyDataset) -> WindowOperatorSum {
    ds.as_operator_sum()
}

/// `x = Σ_{i, m ≠ I} |p_{m,i} - ⟨y|P_m^i|y⟩|`.
pub fn figure_of_merit(y: &Mps, ds: &TomographyDataset) -> Result<f64> {
    check_shape(y, ds)?;
    let e = window_expectations(y, ds.window_size())?;
    Ok(coefficient_distance(ds, &e))
}

fn check_shape(y: &Mps, ds: &TomographyDataset) -> Result<()> {
    if y.n_sites() != ds.n_sites() {
        return Err(Error::DimensionMismatch(format!("{}-site state for a {}-site dataset", y.n_sites(), ds.n_sites())));
    }
    Ok(())
}

/// Output of one thresholding step.
#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub next: WindowOperatorSum,
    pub state: Mps,
    pub eigenvalue: f64,
    /// Window expectations of `state`, all words.
    pub expectations: Vec<Vec<f64>>,
    pub converged: bool,
}

/// One update `Y' = Y + δ (R - y ⟨y|P|y⟩)` with `|y⟩` the variational top
/// eigenvector of `Y`.
pub fn svt_step(
    y: &WindowOperatorSum,
    r: &WindowOperatorSum,
    delta: f64,
    warm: Option<&Mps>,
    sweep: &SweepConfig,
) -> Result<StepOutcome> {
    if y.n_sites() != r.n_sites() || y.window_size() != r.window_size() {
        return Err(Error::DimensionMismatch("iterate and data operator differ in shape".into()));
    }
    let mut cfg = *sweep;
    cfg.extremum = Extremum::Max;
    let eig = extremal_eigenstate(y, &cfg, warm)?;
    let expectations = window_expectations(&eig.state, y.window_size())?;
    let x = WindowOperatorSum::from_windows(
        y.n_sites(),
        y.window_size(),
        expectations.iter().map(|e| e.iter().map(|v| eig.eigenvalue * v).collect()).collect(),
    )?;
    let next = y.axpy(delta, &r.axpy(-1.0, &x)?)?;
    Ok(StepOutcome { next, state: eig.state, eigenvalue: eig.eigenvalue, expectations, converged: eig.converged })
}

/// Runs the thresholding loop. Iteration `n` (from 1) evaluates the top
/// eigenvector `|y_n⟩` of `Y_n`, where `Y_1 = Y_0 + δ_1 (R - X_0)` and
/// `X_0 = 0` for a zero start. The returned state minimizes `x_n` over all
/// iterations; fidelities against `reference` are diagnostics only.
pub fn run(ds: &TomographyDataset, cfg: &SvtConfig, reference: Option<&Mps>) -> Result<ReconstructionResult> {
    cfg.validate()?;
    if let Some(r) = reference {
        check_shape(r, ds)?;
    }
    let r = build_r(ds);
    let mut sweep = cfg.sweep;
    sweep.extremum = Extremum::Max;

    // Y_0 and the X_0 it induces
    let (mut y, mut warm, mut x_prev) = match cfg.init {
        Init::Zero => (WindowOperatorSum::zeros(ds.n_sites(), ds.window_size())?, None, WindowOperatorSum::zeros(ds.n_sites(), ds.window_size())?),
        Init::Data => {
            let mut cold = sweep;
            cold.max_sweeps = cfg.restart_sweeps.max(sweep.max_sweeps);
            let eig = extremal_eigenstate(&r, &cold, None)?;
            let e = window_expectations(&eig.state, ds.window_size())?;
            let x = scaled_expectations(ds, &e, eig.eigenvalue)?;
            (r.clone(), Some(eig.state), x)
        }
    };

    let mut trace = Vec::new();
    let mut best: Option<(Mps, usize, f64, Option<f64>)> = None;
    let mut unconverged = 0;
    for n in 1..=cfg.n_iters {
        let delta = cfg.step.step(n);
        y = y.axpy(delta, &r.axpy(-1.0, &x_prev)?)?;
        let mut eig = extremal_eigenstate(&y, &sweep, warm.as_ref())?;
        if cfg.restart_every > 0 && n % cfg.restart_every == 0 {
            let mut fresh = sweep;
            fresh.max_sweeps = cfg.restart_sweeps.max(1);
            fresh.seed = sweep.seed.wrapping_add(n as u64);
            let alt = extremal_eigenstate(&y, &fresh, None)?;
            if alt.eigenvalue > eig.eigenvalue + 1e-12 {
                eig = alt;
            }
        }
        if !eig.converged {
            unconverged += 1;
        }
        let e = window_expectations(&eig.state, ds.window_size())?;
        let merit = coefficient_distance(ds, &e);
        x_prev = scaled_expectations(ds, &e, eig.eigenvalue)?;
        let is_best = best.as_ref().is_none_or(|b| merit < b.2);
        let record = n % cfg.record_stride == 0 || n == cfg.n_iters;
        let fidelity = if record || is_best {
            match reference {
                Some(rf) => Some(rf.fidelity(&eig.state)?),
                None => None,
            }
        } else {
            None
        };
        if record {
            trace.push(TraceEntry { iteration: n, eigenvalue: eig.eigenvalue, merit, fidelity, converged: eig.converged });
        }
        if is_best {
            best = Some((eig.state.clone(), n, merit, fidelity));
        }
        warm = Some(eig.state);
    }
    let (best_state, best_iteration, best_merit, best_fidelity) = best.expect("at least one iteration");
    Ok(ReconstructionResult { best_state, best_iteration, best_merit, best_fidelity, trace, final_y: y, unconverged_solves: unconverged })
}

fn scaled_expectations(ds: &TomographyDataset, e: &[Vec<f64>], scale: f64) -> Result<WindowOperatorSum> {
    WindowOperatorSum::from_windows(ds.n_sites(), ds.window_size(), e.iter().map(|w| w.iter().map(|v| scale * v).collect()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pauli::PauliWord;
    use crate::tomography::simulate_reductions;

    #[test]
    fn r_of_product_state() {
        let ds = simulate_reductions(&Mps::basis_state(&[0; 3], 2).unwrap(), 1).unwrap();
        let r = build_r(&ds);
        let z: PauliWord = "Z".parse().unwrap();
        let i: PauliWord = "I".parse().unwrap();
        for w in 0..3 {
            assert!((r.get(w, &z) - 1.0).abs() < 1e-12);
            assert!((r.get(w, &i) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn merit_is_analytic_for_flipped_product() {
        let ones = Mps::basis_state(&[1; 4], 2).unwrap();
        let zeros = Mps::basis_state(&[0; 4], 2).unwrap();
        let ds = simulate_reductions(&ones, 1).unwrap();
        assert!((figure_of_merit(&zeros, &ds).unwrap() - 8.0).abs() < 1e-12);
        assert!(figure_of_merit(&ones, &ds).unwrap() < 1e-12);
    }

    #[test]
    fn zero_step_and_first_step() {
        let ds = simulate_reductions(&Mps::basis_state(&[0, 1, 0], 2).unwrap(), 2).unwrap();
        let r = build_r(&ds);
        let cfg = SweepConfig::new(2, Extremum::Max);
        let out = svt_step(&r, &r, 0.0, None, &cfg).unwrap();
        assert_eq!(out.next, r);
        let zero = WindowOperatorSum::zeros(3, 2).unwrap();
        let out = svt_step(&zero, &r, 0.7, None, &cfg).unwrap();
        assert!(out.eigenvalue.abs() < 1e-12);
        assert!(out.next.max_abs_diff(&r.scale(0.7)).unwrap() < 1e-12);
    }

    #[test]
    fn single_iteration_returns_top_state_of_r() {
        let target = Mps::basis_state(&[1, 0, 1, 1], 2).unwrap();
        let ds = simulate_reductions(&target, 2).unwrap();
        let res = run(&ds, &SvtConfig::new(2, 1, 0.5), Some(&target)).unwrap();
        assert_eq!(res.best_iteration, 1);
        assert!(res.best_fidelity.unwrap() > 1.0 - 1e-10);
        assert!(res.best_merit < 1e-8);
    }

    #[test]
    fn exact_fixed_point() {
        let target = Mps::basis_state(&[0, 1, 1], 2).unwrap();
        let ds = simulate_reductions(&target, 2).unwrap();
        let r = build_r(&ds);
        // the normalized data operator has the target as unique top state with eigenvalue 1
        let y = r.scale(1.0 / 2.0);
        let out = svt_step(&y, &r, 0.3, Some(&target), &SvtConfig::new(2, 1, 0.3).sweep).unwrap();
        let x = r.scale(out.eigenvalue);
        let expected = y.axpy(0.3, &r.axpy(-1.0, &x).unwrap()).unwrap();
        assert!(out.next.max_abs_diff(&expected).unwrap() < 1e-9);
    }

    #[test]
    fn rejects_bad_config() {
        let ds = simulate_reductions(&Mps::basis_state(&[0; 3], 2).unwrap(), 1).unwrap();
        assert!(run(&ds, &SvtConfig::new(2, 0, 1.0), None).is_err());
        assert!(run(&ds, &SvtConfig::new(2, 1, -1.0), None).is_err());
    }
}
