//! Command-line front end.
//!
//! Every subcommand writes its result file and prints a one-line JSON
//! summary on stdout. Failures print `{"error": {...}}` on stdout, a human
//! message on stderr, and exit nonzero (2 for usage errors, 3 when a dense
//! fallback exceeds the limit, 1 otherwise).

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use mpstomo_core::certify::{fidelity_bound, gap_lower_bound, parent_hamiltonian};
use mpstomo_core::disentangle::{choose_kappa, circuit_to_mps, error_bound, run_disentangle};
use mpstomo_core::eigensolver::{extremal_eigenstate, Extremum, SweepConfig};
use mpstomo_core::states::{cluster_state, ghz_state, ising_hamiltonian, random_nn_hamiltonian, w_state};
use mpstomo_core::svt::{default_step, run, Init, SvtConfig};
use mpstomo_core::tomography::{add_noise, simulate_reductions};
use mpstomo_core::{Mps, WindowOperatorSum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::error::CliError;
use crate::experiment::{run_experiment, ExperimentConfig, ExperimentKind};
use crate::formats::{read_dataset, read_state, write_json, CertificateJson, CircuitJson, DatasetJson, MpsJson, SvtResultJson};

/// Overrides the dimension cap of dense fallbacks.
pub const DENSE_LIMIT_ENV: &str = "MPSTOMO_DENSE_LIMIT";

#[derive(Debug, Parser)]
#[command(name = "mpstomo", version, about = "Matrix product state tomography: reconstruction and certification")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a named state as an MPS file.
    GenState(GenStateArgs),
    /// Exact window reductions of a state.
    Simulate(SimulateArgs),
    /// Add Gaussian noise to a dataset.
    Noise(NoiseArgs),
    /// Reconstruct by singular value thresholding.
    ReconstructSvt(SvtArgs),
    /// Sequential disentangling circuit of a state.
    ReconstructDisentangle(DisentangleArgs),
    /// Parent-Hamiltonian gap and fidelity certificate.
    Certify(CertifyArgs),
    /// Run an experiment and write CSV plus a summary.
    Experiment(ExperimentArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StateKind {
    W,
    Ghz,
    Cluster,
    /// |0⋯0⟩
    Product,
    /// Random MPS with the given bond dimension.
    Random,
    /// Variational ground state of the critical transverse-field Ising chain.
    Ising,
    /// Variational ground state of a random nearest-neighbour Hamiltonian.
    RandomNn,
}

#[derive(Debug, Args)]
pub struct GenStateArgs {
    #[arg(long, value_enum)]
    pub kind: StateKind,
    #[arg(long = "n-sites", short = 'n')]
    pub n_sites: usize,
    /// Relative phase of the GHZ state.
    #[arg(long, default_value_t = 0.0)]
    pub phase: f64,
    /// Bond dimension for `random`, `ising` and `random-nn`.
    #[arg(long, default_value_t = 4)]
    pub bond_dim: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub state: PathBuf,
    #[arg(long, default_value_t = 2)]
    pub window_size: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct NoiseArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub sigma: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InitArg {
    Zero,
    #[value(name = "R")]
    Data,
}

#[derive(Debug, Args)]
pub struct SvtArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, default_value_t = 8)]
    pub bond_dim: usize,
    #[arg(long, default_value_t = 1000)]
    pub iters: usize,
    /// Constant step; defaults to 0.03 / N².
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long, value_enum, default_value = "zero")]
    pub init: InitArg,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1)]
    pub record_stride: usize,
    /// State to report fidelities against.
    #[arg(long)]
    pub reference: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct DisentangleArgs {
    #[arg(long)]
    pub state: PathBuf,
    /// Block size; defaults to one more than the bond entropy in qudits.
    #[arg(long)]
    pub kappa: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
    /// Also write the MPS encoded by the circuit.
    #[arg(long)]
    pub mps_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CertifyArgs {
    #[arg(long)]
    pub estimate: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub k: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    #[arg(value_enum)]
    pub kind: ExperimentKind,
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Comma-separated chain lengths.
    #[arg(long, value_delimiter = ',')]
    pub n_values: Option<Vec<usize>>,
    #[arg(long)]
    pub iterations: Option<usize>,
    #[arg(long)]
    pub bond_dim: Option<usize>,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    pub sigmas: Option<Vec<f64>>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub record_stride: Option<usize>,
    #[arg(long)]
    pub output_dir: Option<PathBuf>,
}

fn variational_ground_state(h: &WindowOperatorSum, bond_dim: usize, seed: u64) -> Result<(Mps, f64), CliError> {
    let mut cfg = SweepConfig::new(bond_dim, Extremum::Min);
    cfg.seed = seed;
    cfg.max_sweeps = 30;
    let res = extremal_eigenstate(h, &cfg, None)?;
    Ok((res.state, res.eigenvalue))
}

fn gen_state(a: &GenStateArgs) -> Result<serde_json::Value, CliError> {
    let n = a.n_sites;
    let mut energy = None;
    let mps = match a.kind {
        StateKind::W => w_state(n)?,
        StateKind::Ghz => ghz_state(n, a.phase)?,
        StateKind::Cluster => cluster_state(n)?,
        StateKind::Product => Mps::basis_state(&vec![0; n], 2)?,
        StateKind::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
            Mps::random(&vec![2; n], a.bond_dim, &mut rng)?.canonicalize_left()?
        }
        StateKind::Ising | StateKind::RandomNn => {
            let h = if a.kind == StateKind::Ising { ising_hamiltonian(n)? } else { random_nn_hamiltonian(n, a.seed)? };
            let (s, e) = variational_ground_state(&h, a.bond_dim, a.seed)?;
            energy = Some(e);
            s
        }
    };
    write_json(&a.out, &MpsJson::from_mps(&mps))?;
    Ok(json!({"out": a.out, "n_sites": n, "max_bond": mps.max_bond(), "energy": energy}))
}

fn simulate(a: &SimulateArgs) -> Result<serde_json::Value, CliError> {
    let state = read_state(&a.state)?;
    let ds = simulate_reductions(&state, a.window_size)?;
    write_json(&a.out, &DatasetJson::from_dataset(&ds))?;
    Ok(json!({"out": a.out, "n_sites": ds.n_sites(), "windows": ds.n_windows(), "window_size": ds.window_size()}))
}

fn noise(a: &NoiseArgs) -> Result<serde_json::Value, CliError> {
    let ds = add_noise(&read_dataset(&a.data)?, a.sigma, a.seed)?;
    write_json(&a.out, &DatasetJson::from_dataset(&ds))?;
    let max_eps = ds.epsilons().iter().copied().fold(0.0, f64::max);
    Ok(json!({"out": a.out, "sigma": a.sigma, "max_epsilon": max_eps}))
}

fn reconstruct_svt(a: &SvtArgs) -> Result<serde_json::Value, CliError> {
    let ds = read_dataset(&a.data)?;
    let reference = a.reference.as_deref().map(read_state).transpose()?;
    let delta = a.delta.unwrap_or_else(|| default_step(ds.n_sites()));
    let mut cfg = SvtConfig::new(a.bond_dim, a.iters, delta);
    cfg.init = match a.init {
        InitArg::Zero => Init::Zero,
        InitArg::Data => Init::Data,
    };
    cfg.sweep.seed = a.seed;
    cfg.record_stride = a.record_stride.max(1);
    let res = run(&ds, &cfg, reference.as_ref())?;
    write_json(&a.out, &SvtResultJson::new(&cfg, &res))?;
    Ok(json!({
        "out": a.out,
        "delta": delta,
        "best_iteration": res.best_iteration,
        "best_merit": res.best_merit,
        "best_fidelity": res.best_fidelity,
        "unconverged_solves": res.unconverged_solves,
    }))
}

fn reconstruct_disentangle(a: &DisentangleArgs) -> Result<serde_json::Value, CliError> {
    let state = read_state(&a.state)?;
    let kappa = match a.kappa {
        Some(k) => k,
        None => {
            let d = state.phys_dims().first().copied().unwrap_or(2);
            choose_kappa(state.max_bond(), d)
        }
    };
    let circuit = run_disentangle(&state, kappa)?;
    write_json(&a.out, &CircuitJson::from_circuit(&circuit))?;
    if let Some(p) = &a.mps_out {
        write_json(p, &MpsJson::from_mps(&circuit_to_mps(&circuit)?))?;
    }
    Ok(json!({"out": a.out, "kappa": kappa, "steps": circuit.unitaries().len(), "error_bound": error_bound(&circuit)}))
}

fn certify(a: &CertifyArgs) -> Result<serde_json::Value, CliError> {
    let estimate = read_state(&a.estimate)?.canonicalize_left()?;
    let ds = read_dataset(&a.data)?;
    let ph = parent_hamiltonian(&estimate, a.k)?;
    let gap = gap_lower_bound(&ph)?;
    let fid = match fidelity_bound(&ph, &gap, &ds, ds.epsilons()) {
        Ok(f) => Some(f),
        Err(mpstomo_core::Error::VacuousGap(_)) => None,
        Err(e) => return Err(e.into()),
    };
    let cert = CertificateJson::new(&ph, &gap, fid.as_ref());
    write_json(&a.out, &cert)?;
    Ok(json!({
        "out": a.out,
        "gap_bound": cert.gap_bound,
        "fidelity_bound": cert.fidelity_bound,
        "vacuous": cert.vacuous,
        "unique_ground_state": cert.unique_ground_state,
    }))
}

fn experiment(a: &ExperimentArgs) -> Result<serde_json::Value, CliError> {
    let mut cfg = match &a.config {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| CliError::io(p, e))?;
            ExperimentConfig::from_json(&text, Some(a.kind))?
        }
        None => ExperimentConfig::defaults(a.kind),
    };
    if let Some(v) = &a.n_values {
        cfg.n_values = v.clone();
    }
    if let Some(v) = a.iterations {
        cfg.iterations = v;
    }
    if let Some(v) = a.bond_dim {
        cfg.bond_dim = v;
    }
    if a.delta.is_some() {
        cfg.delta = a.delta;
    }
    if let Some(v) = &a.sigmas {
        cfg.sigmas = v.clone();
    }
    if let Some(v) = a.trials {
        cfg.trials = v;
    }
    if let Some(v) = a.seed {
        cfg.seed = v;
    }
    if let Some(v) = a.record_stride {
        cfg.record_stride = v;
    }
    if let Some(v) = &a.output_dir {
        cfg.output_dir = v.clone();
    }
    let out = run_experiment(&cfg)?;
    Ok(json!({"csv": out.csv, "summary": out.summary, "rows": out.rows}))
}

fn apply_env() -> Result<(), CliError> {
    if let Some(v) = std::env::var_os(DENSE_LIMIT_ENV) {
        let limit = v
            .to_str()
            .and_then(|s| s.trim().parse::<usize>().ok())
            .filter(|&l| l > 0)
            .ok_or_else(|| CliError::Config(format!("{DENSE_LIMIT_ENV} must be a positive integer")))?;
        mpstomo_core::set_dense_limit(limit);
    }
    Ok(())
}

pub fn execute(cmd: &Command) -> Result<serde_json::Value, CliError> {
    apply_env()?;
    match cmd {
        Command::GenState(a) => gen_state(a),
        Command::Simulate(a) => simulate(a),
        Command::Noise(a) => noise(a),
        Command::ReconstructSvt(a) => reconstruct_svt(a),
        Command::ReconstructDisentangle(a) => reconstruct_disentangle(a),
        Command::Certify(a) => certify(a),
        Command::Experiment(a) => experiment(a),
    }
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return 0;
            }
            let _ = e.print();
            let err = CliError::Usage(e.kind().to_string());
            println!("{}", err.to_json());
            return err.exit_code();
        }
    };
    match execute(&cli.command) {
        Ok(summary) => {
            println!("{summary}");
            0
        }
        Err(e) => {
            eprintln!("mpstomo: {e}");
            println!("{}", e.to_json());
            e.exit_code()
        }
    }
}

pub fn main() -> i32 {
    main_with(std::env::args_os())
}
