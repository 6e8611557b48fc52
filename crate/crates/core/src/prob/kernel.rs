//! Conditional kernels, causal chains and general (possibly anticipative)
//! reproduction kernels.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::index::{self, Shape};
use super::pmf::{compensated_sum, validate_weights, FinitePmf};
use crate::error::{Error, Result};

/// A table of pmfs over an output alphabet, one row per conditioning history.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct ConditionalKernel {
    rows: usize,
    out: usize,
    probs: Vec<f64>,
}

impl ConditionalKernel {
    /// Builds from a flat row-major table, validating every row.
    pub fn from_flat(out: usize, probs: Vec<f64>) -> Result<Self> {
        if out == 0 || probs.is_empty() || !probs.len().is_multiple_of(out) {
            return Err(Error::Shape(format!(
                "flat kernel of length {} is not a whole number of rows of width {out}",
                probs.len()
            )));
        }
        for (r, row) in probs.chunks(out).enumerate() {
            validate_weights(row).map_err(|e| Error::InvalidPmf(format!("row {r}: {e}")))?;
        }
        Ok(ConditionalKernel {
            rows: probs.len() / out,
            out,
            probs,
        })
    }

    pub fn from_rows(rows: Vec<FinitePmf>) -> Result<Self> {
        let out = rows.first().map(FinitePmf::len).unwrap_or(0);
        if rows.iter().any(|r| r.len() != out) {
            return Err(Error::Shape("kernel rows have different lengths".into()));
        }
        let probs = rows.into_iter().flat_map(FinitePmf::into_weights).collect();
        Self::from_flat(out, probs)
    }

    /// Every row equal to `pmf`.
    pub fn constant(rows: usize, pmf: &FinitePmf) -> Self {
        ConditionalKernel {
            rows,
            out: pmf.len(),
            probs: pmf.weights().repeat(rows),
        }
    }

    /// Unchecked constructor for tables whose rows are normalized by construction.
    pub(crate) fn from_flat_unchecked(out: usize, probs: Vec<f64>) -> Self {
        debug_assert!(probs.len().is_multiple_of(out));
        ConditionalKernel {
            rows: probs.len() / out,
            out,
            probs,
        }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn out(&self) -> usize {
        self.out
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[f64] {
        &self.probs[r * self.out..(r + 1) * self.out]
    }

    #[inline]
    pub fn prob(&self, r: usize, z: usize) -> f64 {
        self.probs[r * self.out + z]
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.probs
    }

    pub fn max_abs_diff(&self, other: &ConditionalKernel) -> f64 {
        self.probs
            .iter()
            .zip(&other.probs)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

impl TryFrom<Vec<Vec<f64>>> for ConditionalKernel {
    type Error = Error;

    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        let out = rows.first().map(Vec::len).unwrap_or(0);
        if rows.iter().any(|r| r.len() != out) {
            return Err(Error::Shape("kernel rows have different lengths".into()));
        }
        Self::from_flat(out, rows.concat())
    }
}

impl From<ConditionalKernel> for Vec<Vec<f64>> {
    fn from(k: ConditionalKernel) -> Self {
        k.probs.chunks(k.out).map(<[f64]>::to_vec).collect()
    }
}

/// One stage `q_i(y_i | y^{i-1}, x^i)` of a causal chain.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "rows", rename_all = "snake_case")]
pub enum ChainStage {
    /// Full table with one row per `(y^{i-1}, x^i)`, see [`Shape::stage_row`].
    Table(ConditionalKernel),
    /// Depends on the current source symbol only; one row per `x_i`.
    PerLetter(ConditionalKernel),
}

impl ChainStage {
    pub fn kernel(&self) -> &ConditionalKernel {
        match self {
            ChainStage::Table(k) | ChainStage::PerLetter(k) => k,
        }
    }
}

/// Causal product kernel `q(y^n | x^n) = prod_i q_i(y_i | y^{i-1}, x^i)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawChain")]
pub struct CausalKernelChain {
    shape: Shape,
    stages: Vec<ChainStage>,
}

#[derive(Deserialize)]
struct RawChain {
    shape: Shape,
    stages: Vec<ChainStage>,
}

impl TryFrom<RawChain> for CausalKernelChain {
    type Error = Error;

    fn try_from(raw: RawChain) -> Result<Self> {
        CausalKernelChain::new(raw.shape, raw.stages)
    }
}

impl CausalKernelChain {
    pub fn new(shape: Shape, stages: Vec<ChainStage>) -> Result<Self> {
        if stages.len() != shape.steps() {
            return Err(Error::Shape(format!(
                "chain has {} stages, horizon {} needs {}",
                stages.len(),
                shape.horizon,
                shape.steps()
            )));
        }
        for (i, stage) in stages.iter().enumerate() {
            let k = stage.kernel();
            let expected = match stage {
                ChainStage::Table(_) => shape.stage_rows(i),
                ChainStage::PerLetter(_) => shape.nx(),
            };
            if k.rows() != expected || k.out() != shape.ny() {
                return Err(Error::Shape(format!(
                    "stage {i} is {}x{}, expected {expected}x{}",
                    k.rows(),
                    k.out(),
                    shape.ny()
                )));
            }
        }
        Ok(CausalKernelChain { shape, stages })
    }

    /// Builds full-table stages from `f(i, y^{i-1}, x^i)`, which returns
    /// non-negative weights normalized here.
    pub fn from_fn<F>(shape: Shape, mut f: F) -> Result<Self>
    where
        F: FnMut(usize, &[usize], &[usize]) -> Vec<f64>,
    {
        let (nx, ny) = (shape.nx(), shape.ny());
        let mut stages = Vec::with_capacity(shape.steps());
        for i in 0..shape.steps() {
            let mut probs = Vec::with_capacity(shape.stage_rows(i) * ny);
            for yp in 0..index::count(ny, i) {
                let ys = index::digits(yp, ny, i);
                for xp in 0..index::count(nx, i + 1) {
                    let xs = index::digits(xp, nx, i + 1);
                    let w = f(i, &ys, &xs);
                    if w.len() != ny {
                        return Err(Error::Shape(format!("stage {i} row has {} entries", w.len())));
                    }
                    probs.extend(FinitePmf::normalized(w)?.into_weights());
                }
            }
            stages.push(ChainStage::Table(ConditionalKernel::from_flat_unchecked(ny, probs)));
        }
        Ok(CausalKernelChain { shape, stages })
    }

    /// Every stage applies the same single-letter channel `per_letter(y | x)`.
    pub fn memoryless(shape: Shape, per_letter: ConditionalKernel) -> Result<Self> {
        let stages = vec![ChainStage::PerLetter(per_letter); shape.steps()];
        CausalKernelChain::new(shape, stages)
    }

    /// Output drawn from `pmf` at every stage, ignoring all inputs.
    pub fn constant(shape: Shape, pmf: &FinitePmf) -> Result<Self> {
        Self::memoryless(shape, ConditionalKernel::constant(shape.nx(), pmf))
    }

    /// `y_i = x_i`; needs equal alphabets.
    pub fn identity(shape: Shape) -> Result<Self> {
        if shape.nx() != shape.ny() {
            return Err(Error::Shape("identity chain needs |X| = |Y|".into()));
        }
        let rows = (0..shape.nx()).map(|x| FinitePmf::point(shape.ny(), x)).collect();
        Self::memoryless(shape, ConditionalKernel::from_rows(rows)?)
    }

    /// Random full-table chain with Dirichlet(1) rows, bounded away from zero.
    pub fn random<R: Rng + ?Sized>(shape: Shape, rng: &mut R) -> Self {
        Self::from_fn(shape, |_, _, _| random_weights(shape.ny(), rng)).expect("random rows are valid")
    }

    #[inline]
    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn stages(&self) -> &[ChainStage] {
        &self.stages
    }

    /// Row `q_i(. | y^{i-1}, x^i)` for prefix indices `y_prev` (length `i`)
    /// and `x_pre` (length `i + 1`).
    #[inline]
    pub fn row(&self, i: usize, y_prev: usize, x_pre: usize) -> &[f64] {
        match &self.stages[i] {
            ChainStage::Table(k) => k.row(self.shape.stage_row(i, y_prev, x_pre)),
            ChainStage::PerLetter(k) => k.row(x_pre % self.shape.nx()),
        }
    }

    /// Converts every stage to a full table.
    pub fn to_tables(&self) -> CausalKernelChain {
        let stages = (0..self.shape.steps())
            .map(|i| match &self.stages[i] {
                ChainStage::Table(k) => ChainStage::Table(k.clone()),
                ChainStage::PerLetter(_) => {
                    let mut probs = Vec::with_capacity(self.shape.stage_rows(i) * self.shape.ny());
                    for yp in 0..index::count(self.shape.ny(), i) {
                        for xp in 0..index::count(self.shape.nx(), i + 1) {
                            probs.extend_from_slice(self.row(i, yp, xp));
                        }
                    }
                    ChainStage::Table(ConditionalKernel::from_flat_unchecked(self.shape.ny(), probs))
                }
            })
            .collect();
        CausalKernelChain {
            shape: self.shape,
            stages,
        }
    }

    /// Largest entrywise difference between the two chains, compared as full tables.
    pub fn max_abs_diff(&self, other: &CausalKernelChain) -> Result<f64> {
        self.shape.ensure_same(&other.shape, "chain comparison")?;
        let (a, b) = (self.to_tables(), other.to_tables());
        Ok(a.stages
            .iter()
            .zip(&b.stages)
            .map(|(s, t)| s.kernel().max_abs_diff(t.kernel()))
            .fold(0.0, f64::max))
    }

    /// `q(y^n | x^n)` for full trajectory indices.
    pub fn path_prob(&self, x: usize, y: usize) -> f64 {
        let (nx, ny, m) = (self.shape.nx(), self.shape.ny(), self.shape.steps());
        let mut p = 1.0;
        for i in 0..m {
            let xp = index::prefix(x, nx, m, i + 1);
            let yp = index::prefix(y, ny, m, i);
            p *= self.row(i, yp, xp)[index::digit(y, ny, m, i)];
            if p == 0.0 {
                break;
            }
        }
        p
    }

    /// Expands the product into a general kernel over whole trajectories.
    pub fn expand(&self) -> Result<GeneralKernel> {
        self.shape.check_joint()?;
        let (xs, ys) = (self.shape.x_paths(), self.shape.y_paths());
        let mut probs = vec![0.0; xs * ys];
        for x in 0..xs {
            for y in 0..ys {
                probs[x * ys + y] = self.path_prob(x, y);
            }
        }
        Ok(GeneralKernel {
            shape: self.shape,
            probs,
        })
    }
}

pub(crate) fn random_weights<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Vec<f64> {
    (0..len).map(|_| -(1.0 - rng.gen::<f64>()).ln() + 1e-3).collect()
}

/// Arbitrary kernel `q(y^n | x^n)`, one row per source trajectory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGeneral", into = "RawGeneral")]
pub struct GeneralKernel {
    shape: Shape,
    probs: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawGeneral {
    shape: Shape,
    rows: Vec<Vec<f64>>,
}

impl From<GeneralKernel> for RawGeneral {
    fn from(k: GeneralKernel) -> Self {
        let rows = k.probs.chunks(k.shape.y_paths()).map(<[f64]>::to_vec).collect();
        RawGeneral { shape: k.shape, rows }
    }
}

impl TryFrom<RawGeneral> for GeneralKernel {
    type Error = Error;

    fn try_from(raw: RawGeneral) -> Result<Self> {
        GeneralKernel::from_rows(raw.shape, raw.rows)
    }
}

impl GeneralKernel {
    pub fn from_rows(shape: Shape, rows: Vec<Vec<f64>>) -> Result<Self> {
        shape.check_joint()?;
        if rows.len() != shape.x_paths() || rows.iter().any(|r| r.len() != shape.y_paths()) {
            return Err(Error::Shape(format!(
                "general kernel must be {}x{}",
                shape.x_paths(),
                shape.y_paths()
            )));
        }
        for (r, row) in rows.iter().enumerate() {
            validate_weights(row).map_err(|e| Error::InvalidPmf(format!("row {r}: {e}")))?;
        }
        Ok(GeneralKernel {
            shape,
            probs: rows.concat(),
        })
    }

    /// Builds rows from `f(x^n)`, normalizing the returned weights.
    pub fn from_fn<F>(shape: Shape, mut f: F) -> Result<Self>
    where
        F: FnMut(&[usize]) -> Vec<f64>,
    {
        shape.check_joint()?;
        let mut probs = Vec::with_capacity(shape.x_paths() * shape.y_paths());
        for x in 0..shape.x_paths() {
            let w = f(&index::digits(x, shape.nx(), shape.steps()));
            if w.len() != shape.y_paths() {
                return Err(Error::Shape(format!("row {x} has {} entries", w.len())));
            }
            probs.extend(FinitePmf::normalized(w)?.into_weights());
        }
        Ok(GeneralKernel { shape, probs })
    }

    /// Deterministic kernel `y^n = g(x^n)`.
    pub fn deterministic<F>(shape: Shape, mut g: F) -> Result<Self>
    where
        F: FnMut(&[usize]) -> Vec<usize>,
    {
        let ny = shape.ny();
        Self::from_fn(shape, |xs| {
            let mut w = vec![0.0; shape.y_paths()];
            w[index::encode(&g(xs), ny)] = 1.0;
            w
        })
    }

    pub fn random<R: Rng + ?Sized>(shape: Shape, rng: &mut R) -> Result<Self> {
        Self::from_fn(shape, |_| random_weights(shape.y_paths(), rng))
    }

    /// `(1 - t) * self + t * other`, which stays a kernel for `t` in `[0, 1]`
    /// and as long as every entry stays non-negative otherwise.
    pub fn mix(&self, other: &GeneralKernel, t: f64) -> Result<GeneralKernel> {
        self.shape.ensure_same(&other.shape, "kernel mixture")?;
        let probs: Vec<f64> = self
            .probs
            .iter()
            .zip(&other.probs)
            .map(|(a, b)| a + t * (b - a))
            .collect();
        if probs.iter().any(|p| *p < 0.0) {
            return Err(Error::Domain(format!("mixture at t = {t} leaves the simplex")));
        }
        let ys = self.shape.y_paths();
        for row in probs.chunks(ys) {
            let total = compensated_sum(row.iter().copied());
            if (total - 1.0).abs() > 1e-9 {
                return Err(Error::Domain(format!("mixture row sums to {total}")));
            }
        }
        Ok(GeneralKernel {
            shape: self.shape,
            probs,
        })
    }

    #[inline]
    pub fn shape(&self) -> Shape {
        self.shape
    }

    #[inline]
    pub fn row(&self, x: usize) -> &[f64] {
        let ys = self.shape.y_paths();
        &self.probs[x * ys..(x + 1) * ys]
    }

    #[inline]
    pub fn prob(&self, x: usize, y: usize) -> f64 {
        self.probs[x * self.shape.y_paths() + y]
    }
}
