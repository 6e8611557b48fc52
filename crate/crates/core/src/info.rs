//! Relative entropy, mutual and directed information, the directed
//! information density, and a report on the four equivalent
//! characterizations of a causal reproduction kernel.
//!
//! All quantities are in bits.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::prob::{
    compensated_sum, index, make_joint_general, prefix_joints, validate_causal, CausalKernelChain, FinitePmf,
    GeneralKernel, JointMeasure, Shape, SourceModel, NEGLIGIBLE_MASS,
};

/// Multiply a rate in bits by this to get nats.
pub const NATS_PER_BIT: f64 = std::f64::consts::LN_2;

/// `D(p || q)` in bits; `f64::INFINITY` when `p` is not absolutely continuous
/// with respect to `q`.
pub fn relative_entropy(p: &FinitePmf, q: &FinitePmf) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::Shape(format!("pmfs of length {} and {}", p.len(), q.len())));
    }
    Ok(kl_bits(p.weights(), q.weights()))
}

fn kl_bits(p: &[f64], q: &[f64]) -> f64 {
    let mut terms = Vec::with_capacity(p.len());
    for (&a, &b) in p.iter().zip(q) {
        if a == 0.0 {
            continue;
        }
        if b == 0.0 {
            return f64::INFINITY;
        }
        terms.push(a * (a / b).log2());
    }
    compensated_sum(terms)
}

/// `I(X^n; Y^n) = D(P || P_X x P_Y)`.
pub fn mutual_information(joint: &JointMeasure) -> f64 {
    let px = joint.x_marginal();
    let py = joint.y_marginal();
    let ys = joint.shape().y_paths();
    let terms = joint.pmf().iter().enumerate().filter_map(|(k, &p)| {
        if p <= 0.0 {
            return None;
        }
        let (x, y) = (k / ys, k % ys);
        Some(p * (p / (px[x] * py[y])).log2())
    });
    compensated_sum(terms).max(0.0)
}

/// Marginal of a joint over `(x^{kx-1}, y^{ky-1})` prefixes of lengths `kx`
/// and `ky`, laid out `x_pre * |Y|^ky + y_pre`.
pub(crate) fn prefix_marginal(joint: &JointMeasure, kx: usize, ky: usize) -> Vec<f64> {
    let shape = joint.shape();
    let (nx, ny, m) = (shape.nx(), shape.ny(), shape.steps());
    let yk = index::count(ny, ky);
    let mut out = vec![0.0; index::count(nx, kx) * yk];
    let (xdiv, ydiv) = (index::count(nx, m - kx), index::count(ny, m - ky));
    let ys = shape.y_paths();
    for (k, &p) in joint.pmf().iter().enumerate() {
        if p != 0.0 {
            let (x, y) = (k / ys, k % ys);
            out[(x / xdiv) * yk + y / ydiv] += p;
        }
    }
    out
}

fn prefix_tables_from_joint(joint: &JointMeasure) -> Vec<Vec<f64>> {
    (1..=joint.shape().steps())
        .map(|k| prefix_marginal(joint, k, k))
        .collect()
}

/// `sum_i I(X^i; Y_i | Y^{i-1})` from the prefix tables `P_i(x^i, y^i)`.
pub(crate) fn directed_from_prefixes(shape: Shape, tables: &[Vec<f64>]) -> f64 {
    let (nx, ny) = (shape.nx(), shape.ny());
    let mut terms = Vec::new();
    for (i, table) in tables.iter().enumerate() {
        let xs = index::count(nx, i + 1);
        let yprev = index::count(ny, i);
        let ycur = yprev * ny;
        // P(y^i), then P(y^{i-1})
        let mut py = vec![0.0; ycur];
        for x in 0..xs {
            for (y, slot) in py.iter_mut().enumerate() {
                *slot += table[x * ycur + y];
            }
        }
        let py_prev: Vec<f64> = py.chunks(ny).map(|c| compensated_sum(c.iter().copied())).collect();
        for x in 0..xs {
            for yp in 0..yprev {
                let row = &table[x * ycur + yp * ny..x * ycur + (yp + 1) * ny];
                let hist = compensated_sum(row.iter().copied());
                if hist <= NEGLIGIBLE_MASS {
                    continue;
                }
                for (y, &p) in row.iter().enumerate() {
                    if p > 0.0 {
                        let cond = p / hist;
                        let marg = py[yp * ny + y] / py_prev[yp];
                        terms.push(p * (cond / marg).log2());
                    }
                }
            }
        }
    }
    compensated_sum(terms).max(0.0)
}

/// `I(X^n -> Y^n)` for a causal chain.
pub fn directed_information(source: &SourceModel, chain: &CausalKernelChain) -> Result<f64> {
    let tables = prefix_joints(source, chain)?;
    Ok(directed_from_prefixes(chain.shape(), &tables))
}

/// `I(X^n -> Y^n)` for an arbitrary kernel.
pub fn directed_information_general(source: &SourceModel, kernel: &GeneralKernel) -> Result<f64> {
    let joint = make_joint_general(source, kernel)?;
    Ok(directed_information_of_joint(&joint))
}

pub fn directed_information_of_joint(joint: &JointMeasure) -> f64 {
    directed_from_prefixes(joint.shape(), &prefix_tables_from_joint(joint))
}

/// Directed information density
/// `log2( prod_i P(y_i | y^{i-1}, x^i) / P(y^n) )`, which for a causal joint is
/// `log2 q(y^n | x^n) / nu(y^n)`. Its mean under the joint is the directed
/// information.
#[derive(Clone, Debug)]
pub struct InformationDensity {
    shape: Shape,
    tables: Vec<Vec<f64>>,
    joint: Vec<f64>,
    output: Vec<f64>,
}

impl InformationDensity {
    pub fn new(joint: &JointMeasure) -> Self {
        InformationDensity {
            shape: joint.shape(),
            tables: prefix_tables_from_joint(joint),
            joint: joint.pmf().to_vec(),
            output: joint.y_marginal(),
        }
    }

    pub fn at(&self, x: usize, y: usize) -> Result<f64> {
        let shape = self.shape;
        let (nx, ny, m) = (shape.nx(), shape.ny(), shape.steps());
        if x >= shape.x_paths() || y >= shape.y_paths() {
            return Err(Error::Shape(format!("pair ({x}, {y}) outside the trajectory space")));
        }
        if self.joint[x * shape.y_paths() + y] <= 0.0 {
            return Err(Error::Domain(format!("pair ({x}, {y}) has zero probability")));
        }
        let mut log_cond = 0.0;
        for i in 0..m {
            let xp = index::prefix(x, nx, m, i + 1);
            let yp = index::prefix(y, ny, m, i);
            let ycur = index::count(ny, i + 1);
            let row = &self.tables[i][xp * ycur + yp * ny..xp * ycur + (yp + 1) * ny];
            let hist = compensated_sum(row.iter().copied());
            log_cond += (row[index::digit(y, ny, m, i)] / hist).log2();
        }
        Ok(log_cond - self.output[y].log2())
    }
}

pub fn information_density(joint: &JointMeasure, x: usize, y: usize) -> Result<f64> {
    InformationDensity::new(joint).at(x, y)
}

/// Outcome of checking the four equivalent causality statements on one kernel.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InfoReport {
    pub mutual_information: f64,
    pub directed_information: f64,
    /// The kernel equals the product of its causal stage conditionals.
    pub causal_factorization: bool,
    /// `Y_i - (X^i, Y^{i-1}) - X_{i+1..n}` for all `i < n`.
    pub future_input_irrelevant: bool,
    /// Mutual information equals directed information within `equal_within`.
    pub mutual_equals_directed: bool,
    /// `Y^i - X^i - X_{i+1}` for all `i < n`.
    pub past_output_independent_of_next_input: bool,
    pub equal_within: f64,
}

impl InfoReport {
    pub fn all_hold(&self) -> bool {
        self.causal_factorization
            && self.future_input_irrelevant
            && self.mutual_equals_directed
            && self.past_output_independent_of_next_input
    }

    pub fn none_hold(&self) -> bool {
        !(self.causal_factorization
            || self.future_input_irrelevant
            || self.mutual_equals_directed
            || self.past_output_independent_of_next_input)
    }
}

pub fn check_equivalences(source: &SourceModel, kernel: &GeneralKernel, tol: f64) -> Result<InfoReport> {
    let joint = make_joint_general(source, kernel)?;
    let shape = joint.shape();
    let tables = prefix_tables_from_joint(&joint);
    let mi = mutual_information(&joint);
    let di = directed_from_prefixes(shape, &tables);

    Ok(InfoReport {
        mutual_information: mi,
        directed_information: di,
        causal_factorization: factorizes_causally(source, kernel, &tables, tol),
        future_input_irrelevant: validate_causal(kernel, source, tol)?.causal,
        mutual_equals_directed: (mi - di).abs() <= tol,
        past_output_independent_of_next_input: past_output_ignores_next_input(source, &joint, tol),
        equal_within: tol,
    })
}

/// Recomposes `prod_i P(y_i | y^{i-1}, x^i)` and compares it with the kernel
/// on every source trajectory of positive probability.
fn factorizes_causally(source: &SourceModel, kernel: &GeneralKernel, tables: &[Vec<f64>], tol: f64) -> bool {
    let shape = kernel.shape();
    let (nx, ny, m) = (shape.nx(), shape.ny(), shape.steps());
    for (x, &mu) in source.joint().iter().enumerate() {
        if mu <= 0.0 {
            continue;
        }
        for y in 0..shape.y_paths() {
            let mut prod = 1.0;
            for i in 0..m {
                let xp = index::prefix(x, nx, m, i + 1);
                let yp = index::prefix(y, ny, m, i);
                let ycur = index::count(ny, i + 1);
                let row = &tables[i][xp * ycur + yp * ny..xp * ycur + (yp + 1) * ny];
                let hist = compensated_sum(row.iter().copied());
                if hist <= NEGLIGIBLE_MASS {
                    prod = 0.0;
                    break;
                }
                prod *= row[index::digit(y, ny, m, i)] / hist;
            }
            if (prod - kernel.prob(x, y)).abs() > tol {
                return false;
            }
        }
    }
    true
}

/// `P(x_{i+1} | x^i, y^i) = mu(x_{i+1} | x^i)` wherever `(x^i, y^i)` has mass.
fn past_output_ignores_next_input(source: &SourceModel, joint: &JointMeasure, tol: f64) -> bool {
    let shape = joint.shape();
    let (nx, ny) = (shape.nx(), shape.ny());
    for i in 0..shape.horizon {
        let wide = prefix_marginal(joint, i + 2, i + 1);
        let yk = index::count(ny, i + 1);
        for xp in 0..index::count(nx, i + 1) {
            for y in 0..yk {
                let masses: Vec<f64> = (0..nx).map(|a| wide[(xp * nx + a) * yk + y]).collect();
                let total = compensated_sum(masses.iter().copied());
                if total <= NEGLIGIBLE_MASS {
                    continue;
                }
                for (a, &w) in masses.iter().enumerate() {
                    if (w / total - source.conditional(i + 1, xp, a)).abs() > tol {
                        return false;
                    }
                }
            }
        }
    }
    true
}
