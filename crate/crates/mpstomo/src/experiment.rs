//! Desk-scale reconstruction experiments.
//!
//! Three protocols share one configuration type:
//!
//! * `ising`: SVT on nearest-neighbour data of the critical transverse-field
//!   Ising ground state, one trace per chain length.
//! * `random`: SVT with a fixed small iteration count on ground states of
//!   random nearest-neighbour Hamiltonians, many draws per chain length.
//! * `wstate`: SVT started from the data operator on W-state data, with
//!   optional Gaussian noise, reporting the minimum-merit iterate.
//!
//! Jobs run on a rayon pool and are emitted in key order, so outputs do not
//! depend on scheduling. Every random draw is seeded by [`derive_seed`].

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use mpstomo_core::eigensolver::{extremal_eigenstate, Extremum, SweepConfig};
use mpstomo_core::states::{dense_ground_state, ising_hamiltonian, random_nn_hamiltonian, to_dense, w_state};
use mpstomo_core::svt::{default_step, run, Init, SvtConfig};
use mpstomo_core::tomography::{add_noise, simulate_reductions};
use mpstomo_core::{Mps, WindowOperatorSum};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::CliError;
use crate::formats::{to_json_string, write_json};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ExperimentKind {
    Ising,
    Random,
    Wstate,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Ising => "ising",
            ExperimentKind::Random => "random",
            ExperimentKind::Wstate => "wstate",
        }
    }

    fn code(self) -> u64 {
        match self {
            ExperimentKind::Ising => 1,
            ExperimentKind::Random => 2,
            ExperimentKind::Wstate => 3,
        }
    }
}

/// Experiment configuration. Fields left out of a config file take the
/// defaults of [`ExperimentConfig::defaults`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub n_values: Vec<usize>,
    pub iterations: usize,
    pub bond_dim: usize,
    /// Constant SVT step; `None` uses [`default_step`] per chain length.
    pub delta: Option<f64>,
    pub sigmas: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
    pub record_stride: usize,
    pub window_size: usize,
    /// Bond dimension of the variational ground states used as targets.
    pub target_bond_dim: usize,
    pub output_dir: PathBuf,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct PartialConfig {
    experiment: Option<ExperimentKind>,
    n_values: Option<Vec<usize>>,
    iterations: Option<usize>,
    bond_dim: Option<usize>,
    delta: Option<f64>,
    sigmas: Option<Vec<f64>>,
    trials: Option<usize>,
    seed: Option<u64>,
    record_stride: Option<usize>,
    window_size: Option<usize>,
    target_bond_dim: Option<usize>,
    output_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn defaults(kind: ExperimentKind) -> Self {
        let base = ExperimentConfig {
            experiment: kind,
            n_values: vec![6, 8, 10],
            iterations: 4000,
            bond_dim: 8,
            delta: None,
            sigmas: vec![0.0],
            trials: 1,
            seed: 0,
            record_stride: 50,
            window_size: 2,
            target_bond_dim: 16,
            output_dir: PathBuf::from("results"),
        };
        match kind {
            ExperimentKind::Ising => base,
            ExperimentKind::Random => {
                ExperimentConfig { n_values: (6..=12).collect(), iterations: 5, trials: 100, record_stride: 1, ..base }
            }
            ExperimentKind::Wstate => ExperimentConfig {
                n_values: (2..=10).map(|k| 2 * k).collect(),
                bond_dim: 2,
                sigmas: vec![0.0, 0.005, 0.01],
                trials: 30,
                record_stride: 100,
                ..base
            },
        }
    }

    /// Parses a JSON config. `kind` fills in a missing `experiment` field
    /// and must agree with it when both are present.
    pub fn from_json(text: &str, kind: Option<ExperimentKind>) -> Result<Self, CliError> {
        let p: PartialConfig = serde_json::from_str(text).map_err(|e| CliError::Schema(format!("experiment config: {e}")))?;
        let experiment = match (p.experiment, kind) {
            (Some(a), Some(b)) if a != b => {
                return Err(CliError::Config(format!("config is for \"{}\" but \"{}\" was requested", a.name(), b.name())))
            }
            (Some(a), _) | (None, Some(a)) => a,
            (None, None) => return Err(CliError::Config("the config does not name an experiment".into())),
        };
        let d = ExperimentConfig::defaults(experiment);
        let cfg = ExperimentConfig {
            experiment,
            n_values: p.n_values.unwrap_or(d.n_values),
            iterations: p.iterations.unwrap_or(d.iterations),
            bond_dim: p.bond_dim.unwrap_or(d.bond_dim),
            delta: p.delta.or(d.delta),
            sigmas: p.sigmas.unwrap_or(d.sigmas),
            trials: p.trials.unwrap_or(d.trials),
            seed: p.seed.unwrap_or(d.seed),
            record_stride: p.record_stride.unwrap_or(d.record_stride),
            window_size: p.window_size.unwrap_or(d.window_size),
            target_bond_dim: p.target_bond_dim.unwrap_or(d.target_bond_dim),
            output_dir: p.output_dir.unwrap_or(d.output_dir),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: &str| Err(CliError::Config(m.into()));
        if self.n_values.is_empty() || self.n_values.iter().any(|&n| n < 2) {
            return bad("n_values must be a non-empty list of chain lengths ≥ 2");
        }
        if self.n_values.iter().any(|&n| n < self.window_size) {
            return bad("every chain must be at least one window long");
        }
        if self.iterations == 0 || self.bond_dim == 0 || self.trials == 0 || self.record_stride == 0 {
            return bad("iterations, bond_dim, trials and record_stride must be at least 1");
        }
        if self.window_size == 0 || self.target_bond_dim == 0 {
            return bad("window_size and target_bond_dim must be at least 1");
        }
        if self.trials >= 1 << 24 || self.n_values.iter().any(|&n| n >= 1 << 16) || self.sigmas.len() >= 1 << 8 {
            return bad("trials, chain lengths or the sigma grid exceed the seed layout");
        }
        if let Some(d) = self.delta {
            if d <= 0.0 || !d.is_finite() {
                return bad("delta must be positive");
            }
        }
        if self.sigmas.is_empty() || self.sigmas.iter().any(|s| s.is_nan() || *s < 0.0 || !s.is_finite()) {
            return bad("sigmas must be a non-empty list of non-negative numbers");
        }
        Ok(())
    }

    fn svt(&self, n: usize, init: Init, seed: u64) -> SvtConfig {
        let mut cfg = SvtConfig::new(self.bond_dim, self.iterations, self.delta.unwrap_or_else(|| default_step(n)));
        cfg.init = init;
        cfg.record_stride = self.record_stride;
        cfg.sweep.seed = seed;
        cfg
    }
}

/// Seed of one job: the first output of ChaCha8 seeded with `master` on
/// stream `code << 56 | n << 40 | sigma_index << 24 | trial`, where `code`
/// is 1, 2, 3 for ising, random, wstate.
pub fn derive_seed(master: u64, kind: ExperimentKind, n: usize, sigma_index: usize, trial: usize) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(kind.code() << 56 | (n as u64) << 40 | (sigma_index as u64) << 24 | trial as u64);
    rng.next_u64()
}

fn ground_state(h: &WindowOperatorSum, bond_dim: usize, seed: u64) -> Result<Mps, mpstomo_core::Error> {
    let mut cfg = SweepConfig::new(bond_dim, Extremum::Min);
    cfg.seed = seed;
    cfg.max_sweeps = 30;
    Ok(extremal_eigenstate(h, &cfg, None)?.state)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsingRow {
    pub n_sites: usize,
    pub iteration: usize,
    pub fidelity: f64,
    pub infidelity: f64,
    pub merit: f64,
    pub eigenvalue: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsingSummary {
    pub n_sites: usize,
    pub seed: u64,
    /// Fidelity of the variational target with the dense ground state.
    pub oracle_fidelity: Option<f64>,
    pub final_fidelity: f64,
    pub best_iteration: usize,
    pub best_merit: f64,
    pub best_fidelity: f64,
    pub unconverged_solves: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomRow {
    pub n_sites: usize,
    pub trial: usize,
    pub seed: u64,
    /// Fidelity of the last iterate; empty when the trial failed.
    pub fidelity: Option<f64>,
    pub infidelity: Option<f64>,
    pub merit: Option<f64>,
    pub status: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WstateRow {
    pub n_sites: usize,
    pub sigma: f64,
    pub trial: usize,
    pub seed: u64,
    /// Fidelity of the minimum-merit iterate; empty when the trial failed.
    pub fidelity: Option<f64>,
    pub infidelity: Option<f64>,
    pub best_iteration: Option<usize>,
    pub best_merit: Option<f64>,
    pub status: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub n_sites: usize,
    pub sigma: Option<f64>,
    pub trials: usize,
    pub failures: usize,
    pub mean_fidelity: Option<f64>,
    pub mean_infidelity: Option<f64>,
    pub min_fidelity: Option<f64>,
}

fn status(r: &Result<(), mpstomo_core::Error>) -> String {
    match r {
        Ok(()) => "ok".into(),
        Err(e) => format!("error: {e}"),
    }
}

fn group(n_sites: usize, sigma: Option<f64>, fids: &[Option<f64>]) -> GroupSummary {
    let ok: Vec<f64> = fids.iter().flatten().copied().collect();
    let mean = (!ok.is_empty()).then(|| ok.iter().sum::<f64>() / ok.len() as f64);
    GroupSummary {
        n_sites,
        sigma,
        trials: fids.len(),
        failures: fids.len() - ok.len(),
        mean_fidelity: mean,
        mean_infidelity: mean.map(|m| 1.0 - m),
        min_fidelity: ok.iter().copied().reduce(f64::min),
    }
}

pub fn run_ising(cfg: &ExperimentConfig) -> Result<(Vec<IsingRow>, Vec<IsingSummary>), CliError> {
    let per_n: Vec<Result<(Vec<IsingRow>, IsingSummary), mpstomo_core::Error>> = cfg
        .n_values
        .par_iter()
        .map(|&n| {
            let seed = derive_seed(cfg.seed, ExperimentKind::Ising, n, 0, 0);
            let h = ising_hamiltonian(n)?;
            let target = ground_state(&h, cfg.target_bond_dim, seed)?;
            let oracle_fidelity = if n <= 10 {
                let (_, exact) = dense_ground_state(&h, Extremum::Min)?;
                Some(to_dense(&target)?.fidelity(&exact))
            } else {
                None
            };
            let ds = simulate_reductions(&target, cfg.window_size)?;
            let res = run(&ds, &cfg.svt(n, Init::Zero, seed), Some(&target))?;
            let rows: Vec<IsingRow> = res
                .trace
                .iter()
                .map(|t| {
                    let f = t.fidelity.unwrap_or(f64::NAN);
                    IsingRow {
                        n_sites: n,
                        iteration: t.iteration,
                        fidelity: f,
                        infidelity: 1.0 - f,
                        merit: t.merit,
                        eigenvalue: t.eigenvalue,
                        converged: t.converged,
                    }
                })
                .collect();
            let summary = IsingSummary {
                n_sites: n,
                seed,
                oracle_fidelity,
                final_fidelity: rows.last().map_or(f64::NAN, |r| r.fidelity),
                best_iteration: res.best_iteration,
                best_merit: res.best_merit,
                best_fidelity: res.best_fidelity.unwrap_or(f64::NAN),
                unconverged_solves: res.unconverged_solves,
            };
            Ok((rows, summary))
        })
        .collect();
    let mut rows = Vec::new();
    let mut summaries = Vec::new();
    for r in per_n {
        let (mut r, s) = r?;
        rows.append(&mut r);
        summaries.push(s);
    }
    Ok((rows, summaries))
}

pub fn run_random(cfg: &ExperimentConfig) -> Result<(Vec<RandomRow>, Vec<GroupSummary>), CliError> {
    let jobs: Vec<(usize, usize)> = cfg.n_values.iter().flat_map(|&n| (0..cfg.trials).map(move |t| (n, t))).collect();
    let rows: Vec<RandomRow> = jobs
        .par_iter()
        .map(|&(n, trial)| {
            let seed = derive_seed(cfg.seed, ExperimentKind::Random, n, 0, trial);
            let mut out = (None, None);
            let result = (|| {
                let h = random_nn_hamiltonian(n, seed)?;
                let target = ground_state(&h, cfg.target_bond_dim, seed)?;
                let ds = simulate_reductions(&target, cfg.window_size)?;
                let res = run(&ds, &cfg.svt(n, Init::Zero, seed), Some(&target))?;
                let last = res.trace.last().expect("the last iteration is always recorded");
                out = (last.fidelity, Some(last.merit));
                Ok(())
            })();
            RandomRow {
                n_sites: n,
                trial,
                seed,
                fidelity: out.0,
                infidelity: out.0.map(|f| 1.0 - f),
                merit: out.1,
                status: status(&result),
            }
        })
        .collect();
    let summaries = cfg
        .n_values
        .iter()
        .map(|&n| {
            let f: Vec<Option<f64>> = rows.iter().filter(|r| r.n_sites == n).map(|r| r.fidelity).collect();
            group(n, None, &f)
        })
        .collect();
    Ok((rows, summaries))
}

pub fn run_wstate(cfg: &ExperimentConfig) -> Result<(Vec<WstateRow>, Vec<GroupSummary>), CliError> {
    let mut jobs = Vec::new();
    for &n in &cfg.n_values {
        for (si, &sigma) in cfg.sigmas.iter().enumerate() {
            // noiseless runs are deterministic; one trial suffices
            let trials = if sigma == 0.0 { 1 } else { cfg.trials };
            for t in 0..trials {
                jobs.push((n, si, sigma, t));
            }
        }
    }
    let rows: Vec<WstateRow> = jobs
        .par_iter()
        .map(|&(n, si, sigma, trial)| {
            let seed = derive_seed(cfg.seed, ExperimentKind::Wstate, n, si, trial);
            let mut out = (None, None, None);
            let result = (|| {
                let target = w_state(n)?;
                let ds = add_noise(&simulate_reductions(&target, cfg.window_size)?, sigma, seed)?;
                let res = run(&ds, &cfg.svt(n, Init::Data, seed), Some(&target))?;
                out = (res.best_fidelity, Some(res.best_iteration), Some(res.best_merit));
                Ok(())
            })();
            WstateRow {
                n_sites: n,
                sigma,
                trial,
                seed,
                fidelity: out.0,
                infidelity: out.0.map(|f| 1.0 - f),
                best_iteration: out.1,
                best_merit: out.2,
                status: status(&result),
            }
        })
        .collect();
    let mut summaries = Vec::new();
    for &n in &cfg.n_values {
        for &sigma in &cfg.sigmas {
            let f: Vec<Option<f64>> = rows.iter().filter(|r| r.n_sites == n && r.sigma == sigma).map(|r| r.fidelity).collect();
            summaries.push(group(n, Some(sigma), &f));
        }
    }
    Ok((rows, summaries))
}

pub fn csv_string<R: Serialize>(rows: &[R]) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Config(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

#[derive(Debug, Serialize)]
struct SummaryFile<'a, S: Serialize> {
    format: &'static str,
    version: u32,
    config: &'a ExperimentConfig,
    groups: &'a [S],
}

/// Paths written by [`run_experiment`].
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutput {
    pub csv: PathBuf,
    pub summary: PathBuf,
    pub rows: usize,
}

fn emit<R: Serialize, S: Serialize>(cfg: &ExperimentConfig, rows: &[R], groups: &[S]) -> Result<ExperimentOutput, CliError> {
    let dir: &Path = &cfg.output_dir;
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let name = cfg.experiment.name();
    let csv = dir.join(format!("{name}.csv"));
    std::fs::write(&csv, csv_string(rows)?).map_err(|e| CliError::io(&csv, e))?;
    let summary = dir.join(format!("{name}_summary.json"));
    write_json(&summary, &SummaryFile { format: "mpstomo.experiment_summary", version: crate::formats::VERSION, config: cfg, groups })?;
    Ok(ExperimentOutput { csv, summary, rows: rows.len() })
}

/// Runs the configured experiment and writes `<name>.csv` and
/// `<name>_summary.json` into the output directory.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput, CliError> {
    cfg.validate()?;
    match cfg.experiment {
        ExperimentKind::Ising => {
            let (rows, s) = run_ising(cfg)?;
            emit(cfg, &rows, &s)
        }
        ExperimentKind::Random => {
            let (rows, s) = run_random(cfg)?;
            emit(cfg, &rows, &s)
        }
        ExperimentKind::Wstate => {
            let (rows, s) = run_wstate(cfg)?;
            emit(cfg, &rows, &s)
        }
    }
}

/// Effective configuration as JSON, for logging.
pub fn config_json(cfg: &ExperimentConfig) -> String {
    to_json_string(cfg)
}

/// Mean of `value` over rows grouped by `key`, keys ascending.
pub fn grouped_mean<R, K: Ord + Copy>(rows: &[R], key: impl Fn(&R) -> K, value: impl Fn(&R) -> Option<f64>) -> BTreeMap<K, f64> {
    let mut acc: BTreeMap<K, (f64, usize)> = BTreeMap::new();
    for r in rows {
        if let Some(v) = value(r) {
            let e = acc.entry(key(r)).or_insert((0.0, 0));
            e.0 += v;
            e.1 += 1;
        }
    }
    acc.into_iter().map(|(k, (s, c))| (k, s / c as f64)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeds_are_stable_and_distinct() {
        let a = derive_seed(7, ExperimentKind::Wstate, 6, 1, 3);
        assert_eq!(a, derive_seed(7, ExperimentKind::Wstate, 6, 1, 3));
        assert_ne!(a, derive_seed(7, ExperimentKind::Wstate, 6, 1, 4));
        assert_ne!(a, derive_seed(7, ExperimentKind::Random, 6, 1, 3));
        assert_ne!(a, derive_seed(8, ExperimentKind::Wstate, 6, 1, 3));
    }

    #[test]
    fn partial_config_takes_defaults() {
        let cfg = ExperimentConfig::from_json(r#"{"n_values": [4], "trials": 2}"#, Some(ExperimentKind::Wstate)).unwrap();
        assert_eq!(cfg.bond_dim, 2);
        assert_eq!(cfg.trials, 2);
        assert!(ExperimentConfig::from_json(r#"{"experiment": "ising"}"#, Some(ExperimentKind::Random)).is_err());
        assert!(ExperimentConfig::from_json(r#"{"bogus": 1}"#, Some(ExperimentKind::Random)).is_err());
        assert!(ExperimentConfig::from_json(r#"{"trials": 0}"#, Some(ExperimentKind::Random)).is_err());
    }

    #[test]
    fn random_rows_are_sorted_by_key() {
        let mut cfg = ExperimentConfig::defaults(ExperimentKind::Random);
        cfg.n_values = vec![4, 3];
        cfg.trials = 3;
        cfg.iterations = 2;
        let (rows, groups) = run_random(&cfg).unwrap();
        let keys: Vec<(usize, usize)> = rows.iter().map(|r| (r.n_sites, r.trial)).collect();
        assert_eq!(keys, vec![(4, 0), (4, 1), (4, 2), (3, 0), (3, 1), (3, 2)]);
        assert!(rows.iter().all(|r| r.status == "ok" && (0.0..=1.0 + 1e-12).contains(&r.fidelity.unwrap())));
        assert_eq!(groups.len(), 2);
    }

    #[test]
    fn grouped_mean_averages() {
        let rows = [(1, Some(1.0)), (1, Some(3.0)), (2, None), (2, Some(5.0))];
        let m = grouped_mean(&rows, |r| r.0, |r| r.1);
        assert_eq!(m[&1], 2.0);
        assert_eq!(m[&2], 5.0);
    }
}
