//! JSON file formats.
//!
//! Complex numbers are `[re, im]` pairs. Matrices are row-major. Every file
//! carries a `format` tag and a `version`; readers reject anything else.
//! The schemas are in `docs/schemas`.

use std::collections::BTreeMap;
use std::path::Path;

use mpstomo_core::certify::{FidelityCertificate, GapCertificate, ParentHamiltonian};
use mpstomo_core::disentangle::{error_bound, DisentangleCircuit};
use mpstomo_core::pauli::PauliWord;
use mpstomo_core::svt::{Init, ReconstructionResult, StepSchedule, SvtConfig};
use mpstomo_core::tomography::DatasetMetadata;
use mpstomo_core::{Gauge, Mps, SiteTensor, TomographyDataset, WindowOperatorSum, C64};
use nalgebra::{DMatrix, DVector};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const VERSION: u32 = 1;

pub type Complex = [f64; 2];

fn enc(z: &C64) -> Complex {
    [z.re, z.im]
}

fn dec(z: &Complex) -> C64 {
    C64::new(z[0], z[1])
}

fn check_header(kind: &str, expected: &str, version: u32) -> Result<(), CliError> {
    if kind != expected {
        return Err(CliError::Schema(format!("expected format \"{expected}\", found \"{kind}\"")));
    }
    if version != VERSION {
        return Err(CliError::Schema(format!("unsupported {expected} version {version}")));
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SiteJson {
    pub left: usize,
    pub phys: usize,
    pub right: usize,
    /// Entries `M[a, s, b]` in row-major `(a, s, b)` order.
    pub data: Vec<Complex>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct MpsJson {
    pub format: String,
    pub version: u32,
    pub n_sites: usize,
    /// `"left_canonical"` or `"none"`.
    pub gauge: String,
    pub sites: Vec<SiteJson>,
}

impl MpsJson {
    pub const FORMAT: &'static str = "mpstomo.mps";

    pub fn from_mps(mps: &Mps) -> Self {
        MpsJson {
            format: Self::FORMAT.into(),
            version: VERSION,
            n_sites: mps.n_sites(),
            gauge: match mps.gauge() {
                Gauge::LeftCanonical => "left_canonical".into(),
                Gauge::None => "none".into(),
            },
            sites: mps
                .sites()
                .iter()
                .map(|t| SiteJson { left: t.left(), phys: t.phys(), right: t.right(), data: t.data().iter().map(enc).collect() })
                .collect(),
        }
    }

    /// A file claiming the canonical gauge is re-verified; a state that
    /// fails the check is tagged `none`.
    pub fn to_mps(&self) -> Result<Mps, CliError> {
        check_header(&self.format, Self::FORMAT, self.version)?;
        if self.sites.len() != self.n_sites {
            return Err(CliError::Schema(format!("n_sites is {} but {} sites are given", self.n_sites, self.sites.len())));
        }
        let gauge = match self.gauge.as_str() {
            "left_canonical" => Gauge::LeftCanonical,
            "none" => Gauge::None,
            g => return Err(CliError::Schema(format!("unknown gauge \"{g}\""))),
        };
        let sites = self
            .sites
            .iter()
            .map(|s| SiteTensor::new(s.left, s.phys, s.right, s.data.iter().map(dec).collect()))
            .collect::<Result<Vec<_>, _>>()?;
        let mps = Mps::new(sites.clone(), gauge)?;
        if gauge == Gauge::LeftCanonical && !mps.is_left_canonical(1e-8) {
            return Ok(Mps::new(sites, Gauge::None)?);
        }
        Ok(mps)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct MetadataJson {
    pub source: String,
    pub noise_sigma: f64,
    pub seed: Option<u64>,
    pub parameters: BTreeMap<String, String>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct WindowJson {
    pub start: usize,
    /// `tr[σ P]` for every Pauli word, in the order of `labels`.
    pub coefficients: Vec<f64>,
    /// Trace-norm error radius.
    pub epsilon: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct DatasetJson {
    pub format: String,
    pub version: u32,
    pub n_sites: usize,
    pub d: usize,
    pub window_size: usize,
    /// Pauli words of a window, first site leftmost.
    pub labels: Vec<String>,
    pub windows: Vec<WindowJson>,
    pub metadata: MetadataJson,
}

fn labels(w: usize) -> Vec<String> {
    (0..1usize << (2 * w)).map(|i| PauliWord::from_index(w, i).to_string()).collect()
}

impl DatasetJson {
    pub const FORMAT: &'static str = "mpstomo.dataset";

    pub fn from_dataset(ds: &TomographyDataset) -> Self {
        let md = &ds.metadata;
        DatasetJson {
            format: Self::FORMAT.into(),
            version: VERSION,
            n_sites: ds.n_sites(),
            d: ds.d(),
            window_size: ds.window_size(),
            labels: labels(ds.window_size()),
            windows: ds
                .coefficients()
                .iter()
                .zip(ds.epsilons())
                .enumerate()
                .map(|(start, (c, &epsilon))| WindowJson { start, coefficients: c.clone(), epsilon })
                .collect(),
            metadata: MetadataJson {
                source: md.source.clone(),
                noise_sigma: md.noise_sigma,
                seed: md.seed,
                parameters: md.parameters.clone(),
            },
        }
    }

    pub fn to_dataset(&self) -> Result<TomographyDataset, CliError> {
        check_header(&self.format, Self::FORMAT, self.version)?;
        if self.d != 2 {
            return Err(CliError::Schema(format!("only qubit datasets are supported, found d = {}", self.d)));
        }
        if self.window_size == 0 || self.window_size > 8 {
            return Err(CliError::Schema(format!("window size {} is out of range", self.window_size)));
        }
        if self.labels != labels(self.window_size) {
            return Err(CliError::Schema("labels do not match the lexicographic Pauli order".into()));
        }
        if let Some((i, w)) = self.windows.iter().enumerate().find(|(i, w)| w.start != *i) {
            return Err(CliError::Schema(format!("window {i} has start {}", w.start)));
        }
        let md = &self.metadata;
        let metadata = DatasetMetadata {
            source: md.source.clone(),
            noise_sigma: md.noise_sigma,
            seed: md.seed,
            parameters: md.parameters.clone(),
        };
        Ok(TomographyDataset::new(
            self.n_sites,
            self.window_size,
            self.windows.iter().map(|w| w.coefficients.clone()).collect(),
            self.windows.iter().map(|w| w.epsilon).collect(),
            metadata,
        )?)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct UnitaryJson {
    /// First site the unitary acts on.
    pub anchor: usize,
    pub dim: usize,
    /// Row-major entries.
    pub data: Vec<Complex>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct CircuitJson {
    pub format: String,
    pub version: u32,
    pub n_sites: usize,
    pub kappa: usize,
    pub d: usize,
    pub unitaries: Vec<UnitaryJson>,
    /// Discarded population of every step.
    pub eps: Vec<f64>,
    pub eta: Vec<Complex>,
    /// Bound on the vector distance between rebuilt and input state.
    pub error_bound: f64,
}

fn row_major(m: &DMatrix<C64>) -> Vec<Complex> {
    (0..m.nrows()).flat_map(|r| (0..m.ncols()).map(move |c| enc(&m[(r, c)]))).collect()
}

impl CircuitJson {
    pub const FORMAT: &'static str = "mpstomo.circuit";

    pub fn from_circuit(c: &DisentangleCircuit) -> Self {
        CircuitJson {
            format: Self::FORMAT.into(),
            version: VERSION,
            n_sites: c.n_sites(),
            kappa: c.kappa(),
            d: c.d(),
            unitaries: c
                .unitaries()
                .iter()
                .enumerate()
                .map(|(anchor, u)| UnitaryJson { anchor, dim: u.nrows(), data: row_major(u) })
                .collect(),
            eps: c.eps().to_vec(),
            eta: c.eta().iter().map(enc).collect(),
            error_bound: error_bound(c),
        }
    }

    pub fn to_circuit(&self) -> Result<DisentangleCircuit, CliError> {
        check_header(&self.format, Self::FORMAT, self.version)?;
        let mut unitaries = Vec::with_capacity(self.unitaries.len());
        for (j, u) in self.unitaries.iter().enumerate() {
            if u.anchor != j || u.data.len() != u.dim * u.dim {
                return Err(CliError::Schema(format!("unitary {j} has anchor {} and {} entries", u.anchor, u.data.len())));
            }
            let data: Vec<C64> = u.data.iter().map(dec).collect();
            unitaries.push(DMatrix::from_row_slice(u.dim, u.dim, &data));
        }
        let eta = DVector::from_vec(self.eta.iter().map(dec).collect());
        let c = DisentangleCircuit::new(self.kappa, self.d, unitaries, eta, self.eps.clone())?;
        if c.n_sites() != self.n_sites {
            return Err(CliError::Schema(format!("circuit covers {} sites, header says {}", c.n_sites(), self.n_sites)));
        }
        Ok(c)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct BlockJson {
    pub start: usize,
    pub rank: usize,
    pub required: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct PairJson {
    pub n: usize,
    pub m: usize,
    pub gamma: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct CertificateJson {
    pub format: String,
    pub version: u32,
    pub n_sites: usize,
    pub k: usize,
    pub window_starts: Vec<usize>,
    pub injective: bool,
    pub blocks: Vec<BlockJson>,
    pub gamma: f64,
    pub pairs: Vec<PairJson>,
    pub gap_bound: f64,
    pub gap_vacuous: bool,
    /// `tr[P_n σ_n]` per projector; empty when the gap bound is vacuous.
    pub terms: Vec<f64>,
    pub eps: Vec<f64>,
    pub data_windows: Vec<usize>,
    /// Raw bound, possibly negative; absent when the gap bound is vacuous.
    pub fidelity_bound: Option<f64>,
    /// Raw bound clamped to `[0, 1]`; zero when vacuous.
    pub fidelity_bound_reported: f64,
    pub vacuous: bool,
    /// False when the bound only covers the overlap with a degenerate
    /// ground space.
    pub unique_ground_state: bool,
}

impl CertificateJson {
    pub const FORMAT: &'static str = "mpstomo.certificate";

    pub fn new(ph: &ParentHamiltonian, gap: &GapCertificate, fid: Option<&FidelityCertificate>) -> Self {
        let inj = &ph.injectivity;
        CertificateJson {
            format: Self::FORMAT.into(),
            version: VERSION,
            n_sites: ph.n_sites(),
            k: ph.k(),
            window_starts: ph.starts().to_vec(),
            injective: inj.all_injective(),
            blocks: inj.blocks.iter().map(|b| BlockJson { start: b.start, rank: b.rank, required: b.required }).collect(),
            gamma: gap.gamma,
            pairs: gap.pairs.iter().map(|p| PairJson { n: p.n, m: p.m, gamma: p.gamma }).collect(),
            gap_bound: gap.bound,
            gap_vacuous: gap.is_vacuous(),
            terms: fid.map(|f| f.terms.clone()).unwrap_or_default(),
            eps: fid.map(|f| f.eps.clone()).unwrap_or_default(),
            data_windows: fid.map(|f| f.data_windows.clone()).unwrap_or_default(),
            fidelity_bound: fid.map(|f| f.bound),
            fidelity_bound_reported: fid.map_or(0.0, |f| f.reported()),
            vacuous: fid.is_none_or(|f| f.is_vacuous()),
            unique_ground_state: inj.all_injective(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SvtConfigJson {
    pub bond_dim: usize,
    pub n_iters: usize,
    /// Constant step, or the per-iteration sequence when `steps` is set.
    pub delta: Option<f64>,
    pub steps: Option<Vec<f64>>,
    /// `"zero"` or `"R"`.
    pub init: String,
    pub seed: u64,
    pub record_stride: usize,
    pub max_sweeps: usize,
    pub restart_every: usize,
    pub restart_sweeps: usize,
}

impl SvtConfigJson {
    pub fn from_config(cfg: &SvtConfig) -> Self {
        let (delta, steps) = match &cfg.step {
            StepSchedule::Constant(d) => (Some(*d), None),
            StepSchedule::Sequence(v) => (None, Some(v.clone())),
        };
        SvtConfigJson {
            bond_dim: cfg.sweep.bond_dim,
            n_iters: cfg.n_iters,
            delta,
            steps,
            init: init_name(cfg.init).into(),
            seed: cfg.sweep.seed,
            record_stride: cfg.record_stride,
            max_sweeps: cfg.sweep.max_sweeps,
            restart_every: cfg.restart_every,
            restart_sweeps: cfg.restart_sweeps,
        }
    }
}

pub fn init_name(init: Init) -> &'static str {
    match init {
        Init::Zero => "zero",
        Init::Data => "R",
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct TraceJson {
    pub iteration: usize,
    pub eigenvalue: f64,
    pub merit: f64,
    pub fidelity: Option<f64>,
    pub converged: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct OperatorSumJson {
    pub n_sites: usize,
    pub window_size: usize,
    pub windows: Vec<Vec<f64>>,
}

impl OperatorSumJson {
    pub fn from_opsum(o: &WindowOperatorSum) -> Self {
        OperatorSumJson { n_sites: o.n_sites(), window_size: o.window_size(), windows: o.windows().to_vec() }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SvtResultJson {
    pub format: String,
    pub version: u32,
    pub config: SvtConfigJson,
    pub best_iteration: usize,
    pub best_merit: f64,
    pub best_fidelity: Option<f64>,
    pub unconverged_solves: usize,
    pub trace: Vec<TraceJson>,
    pub final_y: OperatorSumJson,
    pub best_state: MpsJson,
}

impl SvtResultJson {
    pub const FORMAT: &'static str = "mpstomo.svt_result";

    pub fn new(cfg: &SvtConfig, res: &ReconstructionResult) -> Self {
        SvtResultJson {
            format: Self::FORMAT.into(),
            version: VERSION,
            config: SvtConfigJson::from_config(cfg),
            best_iteration: res.best_iteration,
            best_merit: res.best_merit,
            best_fidelity: res.best_fidelity,
            unconverged_solves: res.unconverged_solves,
            trace: res
                .trace
                .iter()
                .map(|t| TraceJson {
                    iteration: t.iteration,
                    eigenvalue: t.eigenvalue,
                    merit: t.merit,
                    fidelity: t.fidelity,
                    converged: t.converged,
                })
                .collect(),
            final_y: OperatorSumJson::from_opsum(&res.final_y),
            best_state: MpsJson::from_mps(&res.best_state),
        }
    }
}

/// Reads a JSON file into `T`.
pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::Schema(format!("{}: {e}", path.display())))
}

/// Pretty JSON with a trailing newline.
pub fn to_json_string<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("file structs always serialize");
    s.push('\n');
    s
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    std::fs::write(path, to_json_string(value)).map_err(|e| CliError::io(path, e))
}

/// Accepts either an MPS file or an SVT result (its best state).
pub fn read_state(path: &Path) -> Result<Mps, CliError> {
    let value: serde_json::Value = read_json(path)?;
    let format = value.get("format").and_then(|f| f.as_str()).unwrap_or_default().to_string();
    let mps: MpsJson = if format == SvtResultJson::FORMAT {
        serde_json::from_value::<SvtResultJson>(value).map_err(|e| CliError::Schema(format!("{}: {e}", path.display())))?.best_state
    } else {
        serde_json::from_value(value).map_err(|e| CliError::Schema(format!("{}: {e}", path.display())))?
    };
    mps.to_mps()
}

pub fn read_dataset(path: &Path) -> Result<TomographyDataset, CliError> {
    read_json::<DatasetJson>(path)?.to_dataset()
}
