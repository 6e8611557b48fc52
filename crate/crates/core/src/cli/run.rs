use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::json;

use super::config::{Experiment, ExperimentConfig, KernelSource, OutputLawSpec};
use super::format::sig12;
use crate::coding::{simulate, SimParams, SimReport};
use crate::distortion::{d_max_min_sequence, d_max_product, DistortionModel};
use crate::error::{Error, Result};
use crate::info::{check_equivalences, directed_information_general, mutual_information};
use crate::oracle::{brute_force_lagrangian, compare};
use crate::prob::{make_joint_general, CausalKernelChain, GeneralKernel, OutputProcess, Shape, SourceModel};
use crate::solver::{
    default_grid, properties_report, solve_fixed_s, solve_for_distortion, sweep, RDCurve, RateDistortionPoint,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    Solve,
    Sweep,
    Properties,
    Oracle,
    Simulate,
    Dmax,
    Info,
}

/// What a command produced.
#[derive(Clone, Debug, PartialEq)]
pub struct Outcome {
    /// False when a check reported by the command failed.
    pub passed: bool,
    pub files: Vec<PathBuf>,
    pub summary: String,
}

pub const CURVE_HEADER: &str = "s,D,R,rate_formula,iterations,converged";

pub fn curve_csv(curve: &RDCurve) -> String {
    let mut out = String::from(CURVE_HEADER);
    out.push('\n');
    for p in &curve.points {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            sig12(p.s),
            sig12(p.distortion),
            sig12(p.rate),
            sig12(p.rate_formula),
            p.iterations,
            p.converged
        );
    }
    out
}

pub const SIM_HEADER: &str =
    "n,trials,rate,codebook_size,target_D,mean_distortion,distortion_se,typicality_T,typicality_D,epsilon";

pub fn sim_csv(r: &SimReport) -> String {
    format!(
        "{SIM_HEADER}\n{},{},{},{},{},{},{},{},{},{}\n",
        r.horizon,
        r.trials,
        sig12(r.rate),
        r.codebook_size,
        r.target_distortion.map(sig12).unwrap_or_default(),
        sig12(r.mean_distortion),
        sig12(r.distortion_se),
        sig12(r.typicality_t),
        sig12(r.typicality_d),
        sig12(r.epsilon)
    )
}

struct Writer<'a> {
    dir: &'a Path,
    files: Vec<PathBuf>,
}

impl Writer<'_> {
    fn text(&mut self, name: &str, body: &str) -> Result<()> {
        std::fs::create_dir_all(self.dir)
            .map_err(|e| Error::Config(format!("cannot create {}: {e}", self.dir.display())))?;
        let path = self.dir.join(name);
        std::fs::write(&path, body).map_err(|e| Error::Config(format!("cannot write {}: {e}", path.display())))?;
        self.files.push(path);
        Ok(())
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut body = serde_json::to_string_pretty(value).map_err(|e| Error::Config(e.to_string()))?;
        body.push('\n');
        self.text(name, &body)
    }
}

fn need_s(cfg: &ExperimentConfig) -> Result<f64> {
    cfg.s
        .ok_or_else(|| Error::Config("config field `s`: required by this command".into()))
}

fn grid(cfg: &ExperimentConfig) -> Vec<f64> {
    cfg.s_grid.clone().unwrap_or_else(default_grid)
}

fn output_law(spec: &OutputLawSpec, shape: Shape) -> Result<OutputProcess> {
    let law = match spec {
        OutputLawSpec::Iid(p) => OutputProcess::iid(p, shape.horizon)?,
        OutputLawSpec::Joint(p) => OutputProcess::from_joint(shape.reproduction, shape.horizon, p.clone())?,
    };
    if law.alphabet() != shape.reproduction {
        return Err(Error::Config(
            "config field `output_law`: alphabet differs from the reproduction alphabet".into(),
        ));
    }
    Ok(law)
}

enum Kernel {
    Chain(CausalKernelChain),
    General(GeneralKernel),
}

fn load_kernel(spec: &KernelSource, base: &Path) -> Result<Kernel> {
    let bad = |e: serde_json::Error| Error::Config(format!("config field `kernel`: {e}"));
    match spec {
        KernelSource::Chain(v) => Ok(Kernel::Chain(serde_json::from_value(v.clone()).map_err(bad)?)),
        KernelSource::General(v) => Ok(Kernel::General(serde_json::from_value(v.clone()).map_err(bad)?)),
        KernelSource::File { path, pointer } => {
            let path = base.join(path);
            let text = std::fs::read_to_string(&path).map_err(|e| {
                Error::Config(format!(
                    "config field `kernel.file`: cannot read {}: {e}",
                    path.display()
                ))
            })?;
            let doc: serde_json::Value = serde_json::from_str(&text).map_err(bad)?;
            let v = doc
                .pointer(pointer)
                .ok_or_else(|| Error::Config(format!("config field `kernel.pointer`: nothing at {pointer}")))?;
            Ok(Kernel::Chain(serde_json::from_value(v.clone()).map_err(bad)?))
        }
    }
}

/// Kernel used by `simulate`: the per-letter solution at the target
/// distortion when one is given, otherwise the solution at `s`.
fn sim_chain(cfg: &ExperimentConfig, ex: &Experiment, target: Option<f64>) -> Result<RateDistortionPoint> {
    match target {
        Some(d) => {
            if !(ex.source.is_iid() && ex.dist.is_single_letter()) {
                return Err(Error::Config(
                    "config field `sim.target_distortion`: needs an iid source and a single-letter distortion".into(),
                ));
            }
            let src = ex.source.with_horizon(0)?;
            let dist = ex.dist.with_horizon(0)?;
            solve_for_distortion(&src, &dist, d, &ex.opts)
        }
        None => solve_fixed_s(&ex.source, &ex.dist, need_s(cfg)?, &ex.opts),
    }
}

fn per_letter_chain(point: &RateDistortionPoint, shape: Shape) -> Result<CausalKernelChain> {
    if point.chain.shape().horizon == shape.horizon {
        return Ok(point.chain.clone());
    }
    CausalKernelChain::memoryless(shape, point.chain.stages()[0].kernel().clone())
}

fn info_report(
    source: &SourceModel,
    dist: &DistortionModel,
    kernel: &GeneralKernel,
    tol: f64,
) -> Result<serde_json::Value> {
    let report = check_equivalences(source, kernel, tol)?;
    let joint = make_joint_general(source, kernel)?;
    let steps = kernel.shape().steps() as f64;
    Ok(json!({
        "equivalences": report,
        "rate": directed_information_general(source, kernel)? / steps,
        "mutual_rate": mutual_information(&joint) / steps,
        "distortion": crate::distortion::average_distortion(&joint, dist)?,
    }))
}

/// Runs one command; `base` resolves relative paths inside the config.
pub fn run(command: Command, cfg: &ExperimentConfig, base: &Path, out: &Path) -> Result<Outcome> {
    let ex = cfg.experiment()?;
    let mut w = Writer {
        dir: out,
        files: Vec::new(),
    };
    let mut passed = true;
    let summary = match command {
        Command::Solve => {
            let p = solve_fixed_s(&ex.source, &ex.dist, need_s(cfg)?, &ex.opts)?;
            w.json("point.json", &p)?;
            format!(
                "s={} D={} R={} rate_formula={} iterations={} converged={}",
                sig12(p.s),
                sig12(p.distortion),
                sig12(p.rate),
                sig12(p.rate_formula),
                p.iterations,
                p.converged
            )
        }
        Command::Sweep => {
            let curve = sweep(&ex.source, &ex.dist, &grid(cfg), &ex.opts, cfg.sweep_mode)?;
            w.text("curve.csv", &curve_csv(&curve))?;
            w.json("kernels.json", &curve)?;
            format!(
                "{} points, {} converged, D_max={}",
                curve.points.len(),
                curve.converged().count(),
                sig12(curve.d_max_reported)
            )
        }
        Command::Properties => {
            let curve = sweep(&ex.source, &ex.dist, &grid(cfg), &ex.opts, cfg.sweep_mode)?;
            let report = properties_report(&curve, &ex.source, &ex.dist)?;
            passed = report.passed();
            w.text("curve.csv", &curve_csv(&curve))?;
            w.json("properties.json", &report)?;
            let line = |name: &str, c: &crate::solver::PropertyCheck| {
                format!("{name}: {} ({})", if c.passed { "pass" } else { "FAIL" }, c.detail)
            };
            [
                line("monotone", &report.monotone),
                line("convex", &report.convex),
                line("zero_beyond_dmax", &report.zero_beyond_dmax),
                line("positive_below_dmax", &report.positive_below_dmax),
            ]
            .join("\n")
        }
        Command::Oracle => {
            let values = match (&cfg.s_grid, cfg.s) {
                (Some(g), _) => g.clone(),
                (None, Some(s)) => vec![s],
                (None, None) => return Err(Error::Config("config field `s`: oracle needs `s` or `s_grid`".into())),
            };
            let mut rows = Vec::new();
            let mut lines = Vec::new();
            for s in values {
                let point = solve_fixed_s(&ex.source, &ex.dist, s, &ex.opts)?;
                let oracle =
                    brute_force_lagrangian(&ex.source, &ex.dist, s, cfg.oracle.method, cfg.oracle.budget, cfg.seed)?;
                let c = compare(&point, &oracle, cfg.oracle.tol)?;
                passed &= c.passed;
                lines.push(format!(
                    "s={} solver={} oracle={} diff={} {}",
                    sig12(s),
                    sig12(c.solver_value),
                    sig12(c.oracle_value),
                    sig12(c.difference),
                    if c.passed { "pass" } else { "FAIL" }
                ));
                rows.push(json!({
                    "s": s,
                    "comparison": c,
                    "evaluations": oracle.evaluations,
                    "oracle_chain": oracle.best_chain,
                    "solver_converged": point.converged,
                }));
            }
            w.json(
                "oracle.json",
                &json!({ "method": cfg.oracle.method, "budget": cfg.oracle.budget, "seed": cfg.seed, "results": rows }),
            )?;
            lines.join("\n")
        }
        Command::Simulate => {
            let sim = cfg
                .sim
                .as_ref()
                .ok_or_else(|| Error::Config("config field `sim`: required by simulate".into()))?;
            let point = sim_chain(cfg, &ex, sim.target_distortion)?;
            let chain = per_letter_chain(&point, ex.dist.shape())?;
            let params = SimParams {
                rate: sim.rate,
                trials: sim.trials,
                epsilon: sim.epsilon,
                seed: cfg.seed,
                codebook_cap: sim.codebook_cap,
                target_distortion: sim.target_distortion,
            };
            let report = simulate(&ex.source, &ex.dist, &chain, &params)?;
            w.json(
                "sim.json",
                &json!({
                    "report": report,
                    "kernel": { "s": point.s, "rate": point.rate, "distortion": point.distortion },
                }),
            )?;
            w.text("sim.csv", &sim_csv(&report))?;
            format!(
                "n={} codebook={} mean_distortion={} (se {}) P(T)={} P(D)={}",
                report.horizon,
                report.codebook_size,
                sig12(report.mean_distortion),
                sig12(report.distortion_se),
                sig12(report.typicality_t),
                sig12(report.typicality_d)
            )
        }
        Command::Dmax => {
            let seq = d_max_min_sequence(&ex.source, &ex.dist)?;
            let (law, from) = match &cfg.output_law {
                Some(spec) => (output_law(spec, ex.dist.shape())?, "config"),
                None => (
                    solve_fixed_s(&ex.source, &ex.dist, 0.0, &ex.opts)?.output,
                    "solver at s = 0",
                ),
            };
            let product = d_max_product(&ex.source, &law, &ex.dist)?;
            w.json(
                "dmax.json",
                &json!({
                    "d_max_min_sequence": seq.value,
                    "argmin": seq.argmin,
                    "d_max_product": product,
                    "output_law_from": from,
                }),
            )?;
            format!(
                "d_max_min_sequence={}\nd_max_product={}",
                sig12(seq.value),
                sig12(product)
            )
        }
        Command::Info => {
            let spec = cfg
                .kernel
                .as_ref()
                .ok_or_else(|| Error::Config("config field `kernel`: required by info".into()))?;
            let kernel = match load_kernel(spec, base)? {
                Kernel::Chain(c) => c.expand()?,
                Kernel::General(g) => g,
            };
            kernel
                .shape()
                .ensure_same(&ex.dist.shape(), "kernel and config")
                .map_err(|e| Error::Config(format!("config field `kernel`: {e}")))?;
            let report = info_report(&ex.source, &ex.dist, &kernel, cfg.info_tol)?;
            w.json("info.json", &report)?;
            format!(
                "mutual_information={} directed_information={} causal={}",
                report["equivalences"]["mutual_information"],
                report["equivalences"]["directed_information"],
                report["equivalences"]["causal_factorization"]
            )
        }
    };
    Ok(Outcome {
        passed,
        files: w.files,
        summary,
    })
}
