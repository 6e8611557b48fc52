//! Experiment configuration, version 1.
//!
//! ```json
//! {
//!   "schema": 1,
//!   "source": { "kind": "iid", "pmf": [0.5, 0.5] },
//!   "horizon": 2,
//!   "distortion": { "kind": "hamming" },
//!   "s_grid": [-0.5, -1.0, -2.0],
//!   "seed": 7
//! }
//! ```
//!
//! Sources are `iid` (`pmf`), `markov` (`initial`, `transition` rows) or
//! `explicit` (`alphabet`, `joint` over trajectories in mixed-radix order,
//! time 0 most significant). Distortions are `hamming`, `single_letter`
//! (`matrix`) or `table` (`stages`, one flat table per stage over
//! `x^i * |Y|^(i+1) + y^i`).

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::coding::DEFAULT_CODEBOOK_CAP;
use crate::distortion::{DistortionModel, DistortionSpec};
use crate::error::{Error, Result};
use crate::oracle::OracleMethod;
use crate::prob::{FinitePmf, Shape, SourceModel, SourceSpec};
use crate::solver::{Init, KernelUpdate, SolverOptions, SweepMode};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema: u32,
    pub source: SourceSpec,
    pub horizon: usize,
    /// Defaults to the source alphabet size.
    #[serde(default)]
    pub reproduction_alphabet: Option<usize>,
    #[serde(default = "hamming")]
    pub distortion: DistortionSpec,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub s: Option<f64>,
    #[serde(default)]
    pub s_grid: Option<Vec<f64>>,
    #[serde(default)]
    pub sweep_mode: SweepMode,
    #[serde(default)]
    pub oracle: OracleConfig,
    #[serde(default)]
    pub sim: Option<SimConfig>,
    /// Output law for the product-measure `D_max`.
    #[serde(default)]
    pub output_law: Option<OutputLawSpec>,
    /// Kernel analysed by `info`.
    #[serde(default)]
    pub kernel: Option<KernelSource>,
    #[serde(default = "info_tol")]
    pub info_tol: f64,
    /// Output directory, overridden by `--out`.
    #[serde(default)]
    pub out: Option<PathBuf>,
}

fn hamming() -> DistortionSpec {
    DistortionSpec::Hamming
}

fn info_tol() -> f64 {
    1e-10
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitKind {
    #[default]
    Uniform,
    /// Seeded from the config seed.
    Random,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub tol: f64,
    pub max_iters: usize,
    pub init: InitKind,
    pub tie_stationary: bool,
    pub update: KernelUpdate,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let d = SolverOptions::default();
        SolverConfig {
            tol: d.tol,
            max_iters: d.max_iters,
            init: InitKind::Uniform,
            tie_stationary: d.tie_stationary,
            update: d.update,
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleConfig {
    pub method: OracleMethod,
    pub budget: usize,
    pub tol: f64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            method: OracleMethod::Grid,
            budget: 500,
            tol: 1e-3,
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub rate: f64,
    #[serde(default = "trials")]
    pub trials: usize,
    #[serde(default = "epsilon")]
    pub epsilon: f64,
    /// Per-letter solution bisected to this distortion; otherwise the
    /// solution at the config `s` over the full horizon.
    #[serde(default)]
    pub target_distortion: Option<f64>,
    #[serde(default = "cap")]
    pub codebook_cap: usize,
}

fn trials() -> usize {
    1000
}

fn epsilon() -> f64 {
    0.05
}

fn cap() -> usize {
    DEFAULT_CODEBOOK_CAP
}

#[derive(Clone, Debug, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum OutputLawSpec {
    /// Per-letter pmf, repeated over the horizon.
    Iid(FinitePmf),
    /// Pmf over output trajectories.
    Joint(FinitePmf),
}

#[derive(Clone, Debug, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum KernelSource {
    Chain(serde_json::Value),
    General(serde_json::Value),
    /// A JSON file written by this tool, and a JSON pointer to the chain in
    /// it, e.g. `/chain` in `point.json` or `/points/3/chain` in `kernels.json`.
    File {
        path: PathBuf,
        pointer: String,
    },
}

/// Parses and validates; errors name the offending field.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let cfg: ExperimentConfig = serde_path_to_error::deserialize(de)
        .map_err(|e| Error::Config(format!("config field `{}`: {}", e.path(), e.inner())))?;
    if cfg.schema != SCHEMA_VERSION {
        return Err(Error::Config(format!(
            "config field `schema`: version {} is not supported, expected {SCHEMA_VERSION}",
            cfg.schema
        )));
    }
    Ok(cfg)
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
    parse_config(&text)
}

/// Module inputs built from a config.
#[derive(Clone, Debug)]
pub struct Experiment {
    pub source: SourceModel,
    pub dist: DistortionModel,
    pub opts: SolverOptions,
}

fn field(name: &str, e: Error) -> Error {
    Error::Config(format!("config field `{name}`: {e}"))
}

impl ExperimentConfig {
    pub fn experiment(&self) -> Result<Experiment> {
        let source = SourceModel::new(self.source.clone(), self.horizon).map_err(|e| field("source", e))?;
        let ny = self.reproduction_alphabet.unwrap_or(source.alphabet().size());
        let shape = Shape::new(source.alphabet().size(), ny, self.horizon).map_err(|e| field("horizon", e))?;
        let dist = DistortionModel::from_spec(&self.distortion, shape).map_err(|e| field("distortion", e))?;
        let opts = SolverOptions {
            tol: self.solver.tol,
            max_iters: self.solver.max_iters,
            init: match self.solver.init {
                InitKind::Uniform => Init::Uniform,
                InitKind::Random => Init::Random { seed: self.seed },
            },
            tie_stationary: self.solver.tie_stationary,
            update: self.solver.update,
        };
        opts.validate().map_err(|e| field("solver", e))?;
        if !(self.info_tol > 0.0) {
            return Err(Error::Config("config field `info_tol`: must be positive".into()));
        }
        if let Some(s) = self.s {
            if !(s <= 0.0 && s.is_finite()) {
                return Err(Error::Config(format!(
                    "config field `s`: must be finite and <= 0, got {s}"
                )));
            }
        }
        if let Some(grid) = &self.s_grid {
            crate::solver::normalize_grid(grid).map_err(|e| field("s_grid", e))?;
        }
        Ok(Experiment { source, dist, opts })
    }
}
