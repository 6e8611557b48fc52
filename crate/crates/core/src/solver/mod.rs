//! Lagrangian solver for the causal rate distortion function.
//!
//! For a multiplier `s <= 0` the optimal causal kernel has the tilted form
//! `q_i(y_i | y^{i-1}, x^i) ∝ 2^{s rho_i(x^i, y^i)} nu_i(y_i | y^{i-1})`
//! with `nu` the output law it induces. The solver alternates between this
//! kernel update and recomputing `nu` from the joint. Rates are in bits;
//! reported rate and distortion are normalized by `n + 1`.

mod classical;
mod gateaux;
mod properties;

pub use classical::{classical_at_distortion, classical_ba, ClassicalPoint};
pub use gateaux::{finite_difference, gateaux_derivative, gateaux_derivative_general, optimality_gap};
pub use properties::{properties_report, PropertiesReport, PropertyCheck};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distortion::{average_from_prefixes, d_max_min_sequence, DistortionModel};
use crate::error::{Error, Result};
use crate::info::directed_from_prefixes;
use crate::prob::{
    check_source, compensated_sum, index, output_from_prefixes, prefix_joints, CausalKernelChain, ChainStage,
    ConditionalKernel, OutputProcess, Shape, SourceModel,
};

/// Starting output law.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Init {
    #[default]
    Uniform,
    Random {
        seed: u64,
    },
}

/// How the kernel is recomputed from the current output law.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelUpdate {
    /// `q_i ∝ 2^{s rho_i} nu_i`, stage by stage.
    #[default]
    Tilted,
    /// `q_i ∝ 2^{s rho_i - G_i} nu_i`, where `G_i` is the expected
    /// log-normalizer of the later stages, computed backwards in time.
    /// Coincides with `Tilted` at `n = 0` and for memoryless problems.
    TiltedCostToGo,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverOptions {
    pub tol: f64,
    pub max_iters: usize,
    pub init: Init,
    /// One per-letter kernel shared by all stages. Needs an iid source and a
    /// single-letter distortion.
    pub tie_stationary: bool,
    pub update: KernelUpdate,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol: 1e-9,
            max_iters: 20_000,
            init: Init::Uniform,
            tie_stationary: false,
            update: KernelUpdate::Tilted,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(Error::invalid("tol", "must be positive and finite"));
        }
        if self.max_iters == 0 {
            return Err(Error::invalid("max_iters", "must be at least 1"));
        }
        Ok(())
    }
}

/// One solution of the Lagrangian problem at multiplier `s`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateDistortionPoint {
    pub s: f64,
    pub distortion: f64,
    pub rate: f64,
    /// `s D - (1/(n+1)) sum_i E[log2 Z_i]` evaluated at the returned `nu`.
    pub rate_formula: f64,
    /// Sup-norm change of the kernel under one more update.
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
    pub chain: CausalKernelChain,
    pub output: OutputProcess,
}

impl RateDistortionPoint {
    /// `R - s D`, the normalized Lagrangian.
    pub fn lagrangian(&self) -> f64 {
        self.rate - self.s * self.distortion
    }
}

/// Normalized directed information and distortion of a chain.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ChainEvaluation {
    pub rate: f64,
    pub distortion: f64,
}

pub fn evaluate_chain(
    source: &SourceModel,
    dist: &DistortionModel,
    chain: &CausalKernelChain,
) -> Result<ChainEvaluation> {
    dist.shape().ensure_same(&chain.shape(), "distortion model and chain")?;
    let tables = prefix_joints(source, chain)?;
    Ok(ChainEvaluation {
        rate: directed_from_prefixes(chain.shape(), &tables) / chain.shape().steps() as f64,
        distortion: average_from_prefixes(&tables, dist),
    })
}

/// `Σ w_y 2^{e_y}` normalized into `out`; returns `log2` of the normalizer.
/// Exponents are shifted by their maximum over the support of `w`.
fn tilt_row(weights: &[f64], exponent: impl Fn(usize) -> f64, out: &mut [f64]) -> f64 {
    let shift = weights
        .iter()
        .enumerate()
        .filter(|(_, w)| **w > 0.0)
        .map(|(y, _)| exponent(y))
        .fold(f64::NEG_INFINITY, f64::max);
    for (y, slot) in out.iter_mut().enumerate() {
        *slot = if weights[y] > 0.0 {
            weights[y] * (exponent(y) - shift).exp2()
        } else {
            0.0
        };
    }
    let z = compensated_sum(out.iter().copied());
    out.iter_mut().for_each(|v| *v /= z);
    shift + z.log2()
}

struct Problem<'a> {
    source: &'a SourceModel,
    dist: &'a DistortionModel,
    shape: Shape,
    s: f64,
    update: KernelUpdate,
    tied: bool,
}

/// Output-law state: per stage, rows `y^{i-1}` of `nu_i`; a single row when tied.
type Nu = Vec<Vec<f64>>;

/// Kernel together with `log2` normalizers, per stage and kernel row.
struct Update {
    chain: CausalKernelChain,
    log_z: Vec<Vec<f64>>,
}

impl<'a> Problem<'a> {
    fn new(source: &'a SourceModel, dist: &'a DistortionModel, s: f64, opts: &SolverOptions) -> Result<Self> {
        opts.validate()?;
        if !(s <= 0.0 && s.is_finite()) {
            return Err(Error::invalid("s", format!("must be finite and <= 0, got {s}")));
        }
        let shape = dist.shape();
        check_source(source, &shape)?;
        shape.check_joint()?;
        if opts.tie_stationary && !(source.is_iid() && dist.is_single_letter()) {
            return Err(Error::invalid(
                "tie_stationary",
                "needs an iid source and a single-letter distortion",
            ));
        }
        Ok(Problem {
            source,
            dist,
            shape,
            s,
            update: opts.update,
            tied: opts.tie_stationary,
        })
    }

    fn initial_nu(&self, init: Init) -> Nu {
        let ny = self.shape.ny();
        let stages = if self.tied { 1 } else { self.shape.steps() };
        let mut rng = match init {
            Init::Uniform => None,
            Init::Random { seed } => Some(ChaCha8Rng::seed_from_u64(seed)),
        };
        (0..stages)
            .map(|i| {
                let rows = if self.tied { 1 } else { index::count(ny, i) };
                let mut flat = Vec::with_capacity(rows * ny);
                for _ in 0..rows {
                    match rng.as_mut() {
                        None => flat.extend(std::iter::repeat_n(1.0 / ny as f64, ny)),
                        Some(r) => {
                            let w = crate::prob::random_weights(ny, r);
                            let total: f64 = w.iter().sum();
                            flat.extend(w.iter().map(|v| v / total));
                        }
                    }
                }
                flat
            })
            .collect()
    }

    fn nu_from_output(&self, out: &OutputProcess) -> Result<Nu> {
        if out.alphabet() != self.shape.reproduction || out.horizon() != self.shape.horizon {
            return Err(Error::Shape("warm-start output law does not match the problem".into()));
        }
        let nu: Nu = if self.tied {
            vec![letter_average(self.shape, out.joint())]
        } else {
            out.conditionals().iter().map(|k| k.as_flat().to_vec()).collect()
        };
        let floor = WARM_START_BLEND / self.shape.ny() as f64;
        Ok(nu
            .into_iter()
            .map(|row| row.into_iter().map(|v| (1.0 - WARM_START_BLEND) * v + floor).collect())
            .collect())
    }

    fn kernel_update(&self, nu: &Nu) -> Update {
        if self.tied {
            return self.tied_update(&nu[0]);
        }
        match self.update {
            KernelUpdate::Tilted => self.tilted_update(nu),
            KernelUpdate::TiltedCostToGo => self.cost_to_go_update(nu),
        }
    }

    fn tilted_update(&self, nu: &Nu) -> Update {
        let (nx, ny, s) = (self.shape.nx(), self.shape.ny(), self.s);
        let mut stages = Vec::with_capacity(self.shape.steps());
        let mut log_z = Vec::with_capacity(self.shape.steps());
        for i in 0..self.shape.steps() {
            let rows = self.shape.stage_rows(i);
            let mut probs = vec![0.0; rows * ny];
            let mut lz = vec![0.0; rows];
            for yp in 0..index::count(ny, i) {
                let nu_row = &nu[i][yp * ny..(yp + 1) * ny];
                for xp in 0..index::count(nx, i + 1) {
                    let r = self.shape.stage_row(i, yp, xp);
                    lz[r] = tilt_row(
                        nu_row,
                        |y| s * self.dist.rho(i, xp, yp * ny + y),
                        &mut probs[r * ny..(r + 1) * ny],
                    );
                }
            }
            stages.push(ChainStage::Table(ConditionalKernel::from_flat_unchecked(ny, probs)));
            log_z.push(lz);
        }
        Update {
            chain: CausalKernelChain::new(self.shape, stages).expect("stage sizes follow the shape"),
            log_z,
        }
    }

    fn cost_to_go_update(&self, nu: &Nu) -> Update {
        let (nx, ny, s, m) = (self.shape.nx(), self.shape.ny(), self.s, self.shape.steps());
        let mut stages: Vec<ChainStage> = Vec::with_capacity(m);
        let mut log_z: Vec<Vec<f64>> = Vec::with_capacity(m);
        // cost[x_pre * |Y|^i + y_prev] = -log2 Z_i for the stage solved last
        let mut cost: Vec<f64> = Vec::new();
        for i in (0..m).rev() {
            let (xs, yprev) = (index::count(nx, i + 1), index::count(ny, i));
            let rows = self.shape.stage_rows(i);
            let mut probs = vec![0.0; rows * ny];
            let mut lz = vec![0.0; rows];
            let mut next_cost = vec![0.0; xs * yprev];
            for yp in 0..yprev {
                let nu_row = &nu[i][yp * ny..(yp + 1) * ny];
                for xp in 0..xs {
                    let go = |y: usize| -> f64 {
                        if i + 1 == m {
                            return 0.0;
                        }
                        let ycur = yp * ny + y;
                        (0..nx)
                            .map(|x| {
                                let mu = self.source.conditional(i + 1, xp, x);
                                if mu == 0.0 {
                                    0.0
                                } else {
                                    mu * cost[(xp * nx + x) * (yprev * ny) + ycur]
                                }
                            })
                            .sum()
                    };
                    let r = self.shape.stage_row(i, yp, xp);
                    lz[r] = tilt_row(
                        nu_row,
                        |y| s * self.dist.rho(i, xp, yp * ny + y) - go(y),
                        &mut probs[r * ny..(r + 1) * ny],
                    );
                    next_cost[xp * yprev + yp] = -lz[r];
                }
            }
            cost = next_cost;
            stages.push(ChainStage::Table(ConditionalKernel::from_flat_unchecked(ny, probs)));
            log_z.push(lz);
        }
        stages.reverse();
        log_z.reverse();
        Update {
            chain: CausalKernelChain::new(self.shape, stages).expect("stage sizes follow the shape"),
            log_z,
        }
    }

    fn tied_update(&self, nu_bar: &[f64]) -> Update {
        let (nx, ny, s) = (self.shape.nx(), self.shape.ny(), self.s);
        let mut probs = vec![0.0; nx * ny];
        let mut lz = vec![0.0; nx];
        for x in 0..nx {
            lz[x] = tilt_row(nu_bar, |y| s * self.dist.rho(0, x, y), &mut probs[x * ny..(x + 1) * ny]);
        }
        let kernel = ConditionalKernel::from_flat_unchecked(ny, probs);
        Update {
            chain: CausalKernelChain::memoryless(self.shape, kernel).expect("per-letter kernel fits"),
            log_z: vec![lz],
        }
    }

    /// New output law from prefix joints; rows of zero mass keep `prev`.
    fn output_update(&self, tables: &[Vec<f64>], prev: &Nu) -> Nu {
        let ny = self.shape.ny();
        let marginals = y_prefix_marginals(self.shape, tables);
        if self.tied {
            let mut bar = vec![0.0; ny];
            for py in &marginals {
                for (k, &p) in py.iter().enumerate() {
                    bar[k % ny] += p;
                }
            }
            let total = compensated_sum(bar.iter().copied());
            return vec![bar.into_iter().map(|v| v / total).collect()];
        }
        marginals
            .iter()
            .enumerate()
            .map(|(i, py)| {
                let mut flat = prev[i].clone();
                for (yp, chunk) in py.chunks(ny).enumerate() {
                    let mass = compensated_sum(chunk.iter().copied());
                    if mass > 0.0 {
                        for (y, &p) in chunk.iter().enumerate() {
                            flat[yp * ny + y] = p / mass;
                        }
                    }
                }
                flat
            })
            .collect()
    }

    /// Closed-form rate from the normalizers of an update built on the
    /// output law of `tables`.
    fn rate_formula(&self, tables: &[Vec<f64>], update: &Update, distortion: f64) -> f64 {
        let (nx, ny, m) = (self.shape.nx(), self.shape.ny(), self.shape.steps());
        let expected_log_z = if !self.tied && self.update == KernelUpdate::TiltedCostToGo {
            compensated_sum((0..nx).map(|x| self.source.prefix_marginal(0)[x] * update.log_z[0][x]))
        } else {
            let mut terms = Vec::new();
            for (i, table) in tables.iter().enumerate() {
                let ycur = index::count(ny, i + 1);
                for xp in 0..index::count(nx, i + 1) {
                    for yp in 0..index::count(ny, i) {
                        let at = xp * ycur + yp * ny;
                        let mass = compensated_sum(table[at..at + ny].iter().copied());
                        if mass > 0.0 {
                            let lz = if self.tied {
                                update.log_z[0][xp % nx]
                            } else {
                                update.log_z[i][self.shape.stage_row(i, yp, xp)]
                            };
                            terms.push(mass * lz);
                        }
                    }
                }
            }
            compensated_sum(terms)
        };
        self.s * distortion - expected_log_z / m as f64
    }

    fn solve(&self, mut nu: Nu, opts: &SolverOptions) -> Result<RateDistortionPoint> {
        let mut current = self.kernel_update(&nu);
        let mut iterations = 1;
        // `check` is the update built from the output law of `current`
        let (tables, check, residual) = loop {
            let tables = prefix_joints(self.source, &current.chain)?;
            nu = self.output_update(&tables, &nu);
            let check = self.kernel_update(&nu);
            let residual = chain_diff(&check.chain, &current.chain);
            if residual < opts.tol || iterations >= opts.max_iters {
                break (tables, check, residual);
            }
            current = check;
            iterations += 1;
        };
        let converged = residual < opts.tol;
        let steps = self.shape.steps() as f64;
        let distortion = average_from_prefixes(&tables, self.dist);
        let rate = directed_from_prefixes(self.shape, &tables) / steps;
        Ok(RateDistortionPoint {
            s: self.s,
            distortion,
            rate,
            rate_formula: self.rate_formula(&tables, &check, distortion),
            residual,
            iterations,
            converged,
            chain: current.chain,
            output: output_from_prefixes(self.shape, &tables),
        })
    }
}

/// `P(y^i)` for every stage, summed out of the prefix joints.
fn y_prefix_marginals(shape: Shape, tables: &[Vec<f64>]) -> Vec<Vec<f64>> {
    tables
        .iter()
        .enumerate()
        .map(|(i, table)| {
            let ycur = index::count(shape.ny(), i + 1);
            let mut py = vec![0.0; ycur];
            for chunk in table.chunks(ycur) {
                for (slot, &p) in py.iter_mut().zip(chunk) {
                    *slot += p;
                }
            }
            py
        })
        .collect()
}

/// Stage-averaged per-letter marginal of an output law.
fn letter_average(shape: Shape, joint: &[f64]) -> Vec<f64> {
    let (ny, m) = (shape.ny(), shape.steps());
    let mut bar = vec![0.0; ny];
    for (y, &p) in joint.iter().enumerate() {
        for i in 0..m {
            bar[index::digit(y, ny, m, i)] += p / m as f64;
        }
    }
    bar
}

fn chain_diff(a: &CausalKernelChain, b: &CausalKernelChain) -> f64 {
    a.stages()
        .iter()
        .zip(b.stages())
        .map(|(s, t)| match (s, t) {
            (ChainStage::Table(k), ChainStage::Table(l)) | (ChainStage::PerLetter(k), ChainStage::PerLetter(l)) => {
                k.max_abs_diff(l)
            }
            _ => f64::INFINITY,
        })
        .fold(0.0, f64::max)
}

/// Solves the Lagrangian problem at `s`, starting from `opts.init`.
pub fn solve_fixed_s(
    source: &SourceModel,
    dist: &DistortionModel,
    s: f64,
    opts: &SolverOptions,
) -> Result<RateDistortionPoint> {
    let problem = Problem::new(source, dist, s, opts)?;
    problem.solve(problem.initial_nu(opts.init), opts)
}

/// Weight of the uniform law blended into a warm start.
pub const WARM_START_BLEND: f64 = 1e-3;

/// Like [`solve_fixed_s`] but starts from the output law `warm`, blended
/// with the uniform law by [`WARM_START_BLEND`] so that no symbol starts
/// at zero mass.
pub fn solve_fixed_s_warm(
    source: &SourceModel,
    dist: &DistortionModel,
    s: f64,
    opts: &SolverOptions,
    warm: &OutputProcess,
) -> Result<RateDistortionPoint> {
    let problem = Problem::new(source, dist, s, opts)?;
    problem.solve(problem.nu_from_output(warm)?, opts)
}

/// Bisection on `s` for the point whose distortion is just below `target`.
pub fn solve_for_distortion(
    source: &SourceModel,
    dist: &DistortionModel,
    target: f64,
    opts: &SolverOptions,
) -> Result<RateDistortionPoint> {
    if !(target >= 0.0 && target.is_finite()) {
        return Err(Error::invalid("target_distortion", "must be finite and >= 0"));
    }
    let at_zero = solve_fixed_s(source, dist, 0.0, opts)?;
    if at_zero.distortion <= target {
        return Ok(at_zero);
    }
    let mut lo = solve_fixed_s_warm(source, dist, -1.0, opts, &at_zero.output)?;
    while lo.distortion > target {
        if lo.s < -1e4 {
            return Err(Error::Domain(format!(
                "distortion {target} is below what the solver reaches"
            )));
        }
        lo = solve_fixed_s_warm(source, dist, lo.s * 2.0, opts, &lo.output)?;
    }
    let mut hi_s = lo.s / 2.0;
    if lo.s == -1.0 {
        hi_s = 0.0;
    }
    for _ in 0..100 {
        if (hi_s - lo.s).abs() < 1e-12 * lo.s.abs().max(1.0) || target - lo.distortion < 1e-12 {
            break;
        }
        let mid = 0.5 * (lo.s + hi_s);
        let p = solve_fixed_s_warm(source, dist, mid, opts, &lo.output)?;
        if p.distortion <= target {
            lo = p;
        } else {
            hi_s = mid;
        }
    }
    Ok(lo)
}

/// Points ordered by `s` descending.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RDCurve {
    pub points: Vec<RateDistortionPoint>,
    /// Best constant-sequence distortion.
    pub d_max_reported: f64,
}

impl RDCurve {
    pub fn converged(&self) -> impl Iterator<Item = &RateDistortionPoint> {
        self.points.iter().filter(|p| p.converged)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepMode {
    /// In order of decreasing `s`, each solve warm-started from the last.
    #[default]
    Sequential,
    /// Every point from `opts.init`, in parallel.
    Parallel,
}

/// 40 log-spaced multipliers from `-1e-3` to `-20`, plus `0`.
pub fn default_grid() -> Vec<f64> {
    let (lo, hi) = (1e-3f64.ln(), 20f64.ln());
    let mut grid: Vec<f64> = (0..40).map(|k| -(lo + (hi - lo) * k as f64 / 39.0).exp()).collect();
    grid.insert(0, 0.0);
    grid
}

/// Sorts `grid` descending and appends `s = 0` when absent.
pub fn normalize_grid(grid: &[f64]) -> Result<Vec<f64>> {
    if grid.is_empty() {
        return Err(Error::invalid("s_grid", "must not be empty"));
    }
    if let Some(s) = grid.iter().find(|s| !(**s <= 0.0 && s.is_finite())) {
        return Err(Error::invalid(
            "s_grid",
            format!("values must be finite and <= 0, got {s}"),
        ));
    }
    let mut out = grid.to_vec();
    if !out.contains(&0.0) {
        out.push(0.0);
    }
    out.sort_by(|a, b| b.total_cmp(a));
    Ok(out)
}

pub fn sweep(
    source: &SourceModel,
    dist: &DistortionModel,
    grid: &[f64],
    opts: &SolverOptions,
    mode: SweepMode,
) -> Result<RDCurve> {
    let grid = normalize_grid(grid)?;
    let points = match mode {
        SweepMode::Parallel => grid
            .par_iter()
            .map(|&s| solve_fixed_s(source, dist, s, opts))
            .collect::<Result<Vec<_>>>()?,
        SweepMode::Sequential => {
            let mut points: Vec<RateDistortionPoint> = Vec::with_capacity(grid.len());
            for &s in &grid {
                let p = match points.last() {
                    None => solve_fixed_s(source, dist, s, opts)?,
                    Some(prev) => solve_fixed_s_warm(source, dist, s, opts, &prev.output)?,
                };
                points.push(p);
            }
            points
        }
    };
    Ok(RDCurve {
        points,
        d_max_reported: d_max_min_sequence(source, dist)?.value,
    })
}
