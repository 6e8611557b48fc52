//! Brute-force minimization of the Lagrangian `I(X^n; Y^n)/(n+1) - s D`
//! over causal chains, for checking the solver on tiny instances.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distortion::{average_distortion, DistortionModel};
use crate::error::{Error, Result};
use crate::info::mutual_information;
use crate::prob::{
    check_source, make_joint, random_weights, CausalKernelChain, ChainStage, ConditionalKernel, Shape, SourceModel,
};
use crate::solver::RateDistortionPoint;

/// Cap on grid cells searched as a full Cartesian product.
pub const MAX_GRID_CELLS: u128 = 10_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleMethod {
    /// Simplex lattice of step 1/20 per row, then step 1/200 near the incumbent.
    Grid,
    /// Random interior starts, each polished by a pattern search.
    Multistart,
}

#[derive(Clone, Debug)]
pub struct OracleResult {
    pub method: OracleMethod,
    pub s: f64,
    pub best_value: f64,
    pub best_chain: CausalKernelChain,
    pub evaluations: u64,
    source: SourceModel,
    dist: DistortionModel,
}

impl OracleResult {
    pub fn source(&self) -> &SourceModel {
        &self.source
    }

    pub fn distortion(&self) -> &DistortionModel {
        &self.dist
    }
}

/// `I(X^n; Y^n)/(n+1) - s D` with the mutual information taken from the full joint.
pub fn lagrangian_value(
    source: &SourceModel,
    dist: &DistortionModel,
    s: f64,
    chain: &CausalKernelChain,
) -> Result<f64> {
    let joint = make_joint(source, chain)?;
    let steps = chain.shape().steps() as f64;
    Ok(mutual_information(&joint) / steps - s * average_distortion(&joint, dist)?)
}

/// Chain parameters as flat per-stage row tables.
struct Search<'a> {
    source: &'a SourceModel,
    dist: &'a DistortionModel,
    shape: Shape,
    s: f64,
}

impl Search<'_> {
    fn rows(&self) -> Vec<(usize, usize)> {
        (0..self.shape.steps())
            .flat_map(|i| (0..self.shape.stage_rows(i)).map(move |r| (i, r)))
            .collect()
    }

    fn chain(&self, params: &[Vec<f64>]) -> CausalKernelChain {
        let stages = params
            .iter()
            .map(|p| ChainStage::Table(ConditionalKernel::from_flat_unchecked(self.shape.ny(), p.clone())))
            .collect();
        CausalKernelChain::new(self.shape, stages).expect("parameter tables follow the shape")
    }

    fn value(&self, params: &[Vec<f64>]) -> f64 {
        lagrangian_value(self.source, self.dist, self.s, &self.chain(params)).expect("shapes were checked")
    }

    fn uniform(&self) -> Vec<Vec<f64>> {
        let ny = self.shape.ny();
        (0..self.shape.steps())
            .map(|i| vec![1.0 / ny as f64; self.shape.stage_rows(i) * ny])
            .collect()
    }
}

/// Compositions of `total` into `parts`, each part within `[lo_k, hi_k]`.
fn compositions(total: usize, bounds: &[(usize, usize)]) -> Vec<Vec<usize>> {
    fn rec(left: usize, bounds: &[(usize, usize)], cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        let k = cur.len();
        if k + 1 == bounds.len() {
            if left >= bounds[k].0 && left <= bounds[k].1 {
                cur.push(left);
                out.push(cur.clone());
                cur.pop();
            }
            return;
        }
        for v in bounds[k].0..=bounds[k].1.min(left) {
            cur.push(v);
            rec(left - v, bounds, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(total, bounds, &mut Vec::new(), &mut out);
    out
}

fn to_probs(c: &[usize], total: usize) -> Vec<f64> {
    c.iter().map(|&v| v as f64 / total as f64).collect()
}

fn set_row(params: &mut [Vec<f64>], ny: usize, (i, r): (usize, usize), row: &[f64]) {
    params[i][r * ny..(r + 1) * ny].copy_from_slice(row);
}

/// Candidates for every row; searched jointly when the product is small,
/// otherwise one row at a time until a full cycle brings no improvement.
fn lattice_search(
    search: &Search<'_>,
    rows: &[(usize, usize)],
    candidates: &[Vec<Vec<f64>>],
    start: Vec<Vec<f64>>,
    evaluations: &mut u64,
) -> (f64, Vec<Vec<f64>>) {
    let ny = search.shape.ny();
    let cells = candidates
        .iter()
        .try_fold(1u128, |acc, c| acc.checked_mul(c.len() as u128))
        .unwrap_or(u128::MAX);
    if cells <= MAX_GRID_CELLS {
        let (value, cell) = (0..cells as u64)
            .into_par_iter()
            .map(|cell| {
                let mut params = start.clone();
                let mut rest = cell;
                for (row, cands) in rows.iter().zip(candidates).rev() {
                    let k = (rest % cands.len() as u64) as usize;
                    rest /= cands.len() as u64;
                    set_row(&mut params, ny, *row, &cands[k]);
                }
                (search.value(&params), cell)
            })
            .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
            .expect("at least one cell");
        *evaluations += cells as u64;
        let mut params = start;
        let mut rest = cell;
        for (row, cands) in rows.iter().zip(candidates).rev() {
            let k = (rest % cands.len() as u64) as usize;
            rest /= cands.len() as u64;
            set_row(&mut params, ny, *row, &cands[k]);
        }
        return (value, params);
    }
    let mut params = start;
    let mut best = search.value(&params);
    *evaluations += 1;
    loop {
        let mut improved = false;
        for (row, cands) in rows.iter().zip(candidates) {
            let (value, k) = cands
                .par_iter()
                .enumerate()
                .map(|(k, cand)| {
                    let mut trial = params.clone();
                    set_row(&mut trial, ny, *row, cand);
                    (search.value(&trial), k)
                })
                .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
                .expect("non-empty candidates");
            *evaluations += cands.len() as u64;
            if value < best - 1e-15 {
                best = value;
                set_row(&mut params, ny, *row, &cands[k]);
                improved = true;
            }
        }
        if !improved {
            return (best, params);
        }
    }
}

fn grid(search: &Search<'_>) -> (f64, Vec<Vec<f64>>, u64) {
    let ny = search.shape.ny();
    let rows = search.rows();
    let mut evaluations = 0;
    let coarse: Vec<Vec<f64>> = compositions(20, &vec![(0, 20); ny])
        .iter()
        .map(|c| to_probs(c, 20))
        .collect();
    let start = search.uniform();
    let (_, params) = lattice_search(search, &rows, &vec![coarse; rows.len()], start, &mut evaluations);
    let fine: Vec<Vec<Vec<f64>>> = rows
        .iter()
        .map(|&(i, r)| {
            let bounds: Vec<(usize, usize)> = params[i][r * ny..(r + 1) * ny]
                .iter()
                .map(|p| {
                    let c = (p * 200.0).round() as usize;
                    (c.saturating_sub(10), (c + 10).min(200))
                })
                .collect();
            compositions(200, &bounds).iter().map(|c| to_probs(c, 200)).collect()
        })
        .collect();
    let (value, params) = lattice_search(search, &rows, &fine, params, &mut evaluations);
    (value, params, evaluations)
}

/// Moves mass between pairs of entries of one row while that helps,
/// halving the step from 0.1 down to 1e-6.
fn pattern_search(search: &Search<'_>, mut params: Vec<Vec<f64>>) -> (f64, Vec<Vec<f64>>, u64) {
    let ny = search.shape.ny();
    let rows = search.rows();
    let mut best = search.value(&params);
    let mut evaluations = 1;
    let mut step = 0.1f64;
    while step >= 1e-6 {
        let mut improved = false;
        for &(i, r) in &rows {
            for a in 0..ny {
                for b in 0..ny {
                    let (ia, ib) = (r * ny + a, r * ny + b);
                    let amount = step.min(params[i][ib]);
                    if a == b || amount <= 0.0 {
                        continue;
                    }
                    let (old_a, old_b) = (params[i][ia], params[i][ib]);
                    params[i][ia] = old_a + amount;
                    params[i][ib] = old_b - amount;
                    let v = search.value(&params);
                    evaluations += 1;
                    if v < best - 1e-15 {
                        best = v;
                        improved = true;
                    } else {
                        params[i][ia] = old_a;
                        params[i][ib] = old_b;
                    }
                }
            }
        }
        if !improved {
            step /= 2.0;
        }
    }
    (best, params, evaluations)
}

fn multistart(search: &Search<'_>, budget: usize, seed: u64) -> (f64, Vec<Vec<f64>>, u64) {
    let ny = search.shape.ny();
    let results: Vec<(f64, Vec<Vec<f64>>, u64)> = (0..budget)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(k as u64);
            let start = (0..search.shape.steps())
                .map(|i| {
                    (0..search.shape.stage_rows(i))
                        .flat_map(|_| {
                            let w = random_weights(ny, &mut rng);
                            let t: f64 = w.iter().sum();
                            w.into_iter().map(move |v| v / t)
                        })
                        .collect()
                })
                .collect();
            pattern_search(search, start)
        })
        .collect();
    let evaluations = results.iter().map(|r| r.2).sum();
    let (value, params, _) = results
        .into_iter()
        .enumerate()
        .min_by(|(i, a), (j, b)| a.0.total_cmp(&b.0).then(i.cmp(j)))
        .map(|(_, r)| r)
        .expect("budget is positive");
    (value, params, evaluations)
}

/// Searches causal chains for the smallest Lagrangian. Deterministic given
/// `(method, budget, seed)`; `budget` and `seed` only matter for multistart.
pub fn brute_force_lagrangian(
    source: &SourceModel,
    dist: &DistortionModel,
    s: f64,
    method: OracleMethod,
    budget: usize,
    seed: u64,
) -> Result<OracleResult> {
    if !(s <= 0.0 && s.is_finite()) {
        return Err(Error::invalid("s", format!("must be finite and <= 0, got {s}")));
    }
    let shape = dist.shape();
    check_source(source, &shape)?;
    let small_alphabets = shape.nx() <= 3 && shape.ny() <= 3;
    match method {
        OracleMethod::Grid if !(shape.horizon <= 1 && small_alphabets) => {
            return Err(Error::invalid(
                "oracle",
                "grid search needs n <= 1 and alphabets of at most 3",
            ))
        }
        OracleMethod::Multistart if !(shape.horizon <= 2 && small_alphabets) => {
            return Err(Error::invalid(
                "oracle",
                "multistart needs n <= 2 and alphabets of at most 3",
            ))
        }
        OracleMethod::Multistart if budget == 0 => return Err(Error::invalid("budget", "must be at least 1")),
        _ => {}
    }
    let search = Search { source, dist, shape, s };
    let (best_value, params, evaluations) = match method {
        OracleMethod::Grid => grid(&search),
        OracleMethod::Multistart => multistart(&search, budget, seed),
    };
    Ok(OracleResult {
        method,
        s,
        best_value,
        best_chain: search.chain(&params),
        evaluations,
        source: source.clone(),
        dist: dist.clone(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Comparison {
    pub passed: bool,
    pub tol: f64,
    /// Lagrangian of the solver's chain, recomputed from the kernel.
    pub solver_value: f64,
    pub oracle_value: f64,
    /// `solver_value - oracle_value`.
    pub difference: f64,
    pub kernel_max_diff: f64,
}

pub fn compare(point: &RateDistortionPoint, oracle: &OracleResult, tol: f64) -> Result<Comparison> {
    if point.s != oracle.s {
        return Err(Error::invalid(
            "s",
            format!("solver point at s = {} but oracle at s = {}", point.s, oracle.s),
        ));
    }
    point
        .chain
        .shape()
        .ensure_same(&oracle.best_chain.shape(), "solver and oracle instances")?;
    let solver_value = lagrangian_value(&oracle.source, &oracle.dist, oracle.s, &point.chain)?;
    let difference = solver_value - oracle.best_value;
    Ok(Comparison {
        passed: difference.abs() <= tol,
        tol,
        solver_value,
        oracle_value: oracle.best_value,
        difference,
        kernel_max_diff: point.chain.max_abs_diff(&oracle.best_chain)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prob::FinitePmf;
    use crate::solver::{solve_fixed_s, SolverOptions};

    fn uniform_binary() -> (SourceModel, DistortionModel) {
        (
            SourceModel::iid(FinitePmf::uniform(2), 0).unwrap(),
            DistortionModel::hamming(Shape::new(2, 2, 0).unwrap()),
        )
    }

    #[test]
    fn compositions_count() {
        assert_eq!(compositions(20, &[(0, 20); 2]).len(), 21);
        assert_eq!(compositions(20, &[(0, 20); 3]).len(), 231);
        assert_eq!(compositions(200, &[(90, 110), (90, 110)]).len(), 21);
    }

    #[test]
    fn zero_multiplier() {
        let (src, dist) = uniform_binary();
        let o = brute_force_lagrangian(&src, &dist, 0.0, OracleMethod::Grid, 0, 0).unwrap();
        assert!(o.best_value.abs() < 1e-12);
        let p = solve_fixed_s(&src, &dist, 0.0, &SolverOptions::default()).unwrap();
        assert!(compare(&p, &o, 1e-9).unwrap().passed);
    }

    #[test]
    fn grid_finds_bsc_optimum() {
        let (src, dist) = uniform_binary();
        // D = 0.1 at s = -log2 9
        let s = -(9f64.log2());
        let p = solve_fixed_s(&src, &dist, s, &SolverOptions::default()).unwrap();
        let o = brute_force_lagrangian(&src, &dist, s, OracleMethod::Grid, 0, 0).unwrap();
        let c = compare(&p, &o, 1e-3).unwrap();
        assert!(c.passed, "{c:?}");
        assert!(c.kernel_max_diff < 1e-6);
    }

    #[test]
    fn perturbed_kernel_fails() {
        let (src, dist) = uniform_binary();
        let s = -(9f64.log2());
        let mut p = solve_fixed_s(&src, &dist, s, &SolverOptions::default()).unwrap();
        let o = brute_force_lagrangian(&src, &dist, s, OracleMethod::Grid, 0, 0).unwrap();
        let shape = p.chain.shape();
        let row = |x: usize| p.chain.row(0, 0, x).to_vec();
        let (r0, r1) = (row(0), row(1));
        let stage = ConditionalKernel::try_from(vec![vec![r0[0] - 0.1, r0[1] + 0.1], r1]).unwrap();
        p.chain = CausalKernelChain::new(shape, vec![ChainStage::Table(stage)]).unwrap();
        assert!(!compare(&p, &o, 1e-3).unwrap().passed);
    }

    #[test]
    fn multistart_is_deterministic() {
        let src = SourceModel::symmetric_markov(2, 0.2, 1).unwrap();
        let dist = DistortionModel::hamming(Shape::new(2, 2, 1).unwrap());
        let a = brute_force_lagrangian(&src, &dist, -1.0, OracleMethod::Multistart, 8, 5).unwrap();
        let b = brute_force_lagrangian(&src, &dist, -1.0, OracleMethod::Multistart, 8, 5).unwrap();
        assert_eq!(a.best_value, b.best_value);
        assert_eq!(a.best_chain, b.best_chain);
        let k = a.best_chain.expand().unwrap();
        assert!(crate::prob::validate_causal(&k, &src, 1e-9).unwrap().causal);
    }

    #[test]
    fn rejects_large_instances() {
        let src = SourceModel::iid(FinitePmf::uniform(2), 2).unwrap();
        let dist = DistortionModel::hamming(Shape::new(2, 2, 2).unwrap());
        assert!(brute_force_lagrangian(&src, &dist, -1.0, OracleMethod::Grid, 0, 0).is_err());
        assert!(brute_force_lagrangian(&src, &dist, 0.5, OracleMethod::Multistart, 1, 0).is_err());
    }

    #[test]
    fn mismatched_instances() {
        let (src, dist) = uniform_binary();
        let p = solve_fixed_s(&src, &dist, -1.0, &SolverOptions::default()).unwrap();
        let o = brute_force_lagrangian(&src, &dist, -2.0, OracleMethod::Grid, 0, 0).unwrap();
        assert!(compare(&p, &o, 1e-3).is_err());
    }
}
