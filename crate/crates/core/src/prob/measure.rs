//! Joint, output and product measures built from a source and a kernel.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::index::{self, Shape};
use super::kernel::{CausalKernelChain, ConditionalKernel, GeneralKernel};
use super::pmf::{compensated_sum, Alphabet, FinitePmf};
use super::source::SourceModel;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    /// `mu (x) q`: source convolved with a reproduction kernel.
    Convolution,
    /// `mu x nu`: source times an independent output law.
    Product,
}

/// Pmf over `X^{0..n} x Y^{0..n}`, laid out as `x_idx * |Y|^(n+1) + y_idx`.
#[derive(Clone, Debug, PartialEq)]
pub struct JointMeasure {
    shape: Shape,
    pmf: Vec<f64>,
    provenance: Provenance,
}

impl JointMeasure {
    pub fn new(shape: Shape, pmf: Vec<f64>, provenance: Provenance) -> Result<Self> {
        shape.check_joint()?;
        if pmf.len() != shape.joint_len() {
            return Err(Error::Shape(format!(
                "joint pmf has {} atoms, shape needs {}",
                pmf.len(),
                shape.joint_len()
            )));
        }
        let pmf = FinitePmf::new(pmf)?.into_weights();
        Ok(JointMeasure { shape, pmf, provenance })
    }

    #[inline]
    pub fn shape(&self) -> Shape {
        self.shape
    }

    #[inline]
    pub fn pmf(&self) -> &[f64] {
        &self.pmf
    }

    #[inline]
    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    #[inline]
    pub fn prob(&self, x: usize, y: usize) -> f64 {
        self.pmf[x * self.shape.y_paths() + y]
    }

    pub fn x_marginal(&self) -> Vec<f64> {
        self.pmf
            .chunks(self.shape.y_paths())
            .map(|row| compensated_sum(row.iter().copied()))
            .collect()
    }

    pub fn y_marginal(&self) -> Vec<f64> {
        let ys = self.shape.y_paths();
        (0..ys)
            .map(|y| compensated_sum((0..self.shape.x_paths()).map(|x| self.pmf[x * ys + y])))
            .collect()
    }
}

/// Output law `nu` over `Y^{0..n}` with its chain-rule conditionals
/// `nu_i(y_i | y^{i-1})`. Conditioning histories of zero mass carry a
/// uniform placeholder row and are flagged unreachable.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutputProcess {
    alphabet: Alphabet,
    horizon: usize,
    joint: Vec<f64>,
    conditionals: Vec<ConditionalKernel>,
    unreachable: Vec<Vec<bool>>,
}

impl OutputProcess {
    /// From a pmf over `Y^{0..n}`.
    pub fn from_joint(alphabet: Alphabet, horizon: usize, joint: FinitePmf) -> Result<Self> {
        let expected = index::checked_count(alphabet.size(), horizon + 1, "output trajectories")?;
        if joint.len() != expected {
            return Err(Error::Shape(format!(
                "output pmf has {} atoms, expected {expected}",
                joint.len()
            )));
        }
        Ok(Self::from_weights(alphabet, horizon, joint.into_weights()))
    }

    /// Iid law with per-letter pmf `pmf`.
    pub fn iid(pmf: &FinitePmf, horizon: usize) -> Result<Self> {
        let alphabet = Alphabet::new(pmf.len())?;
        index::checked_count(pmf.len(), horizon + 1, "output trajectories")?;
        let mut joint = vec![1.0];
        for _ in 0..=horizon {
            joint = joint
                .iter()
                .flat_map(|&w| pmf.weights().iter().map(move |&p| w * p))
                .collect();
        }
        Ok(Self::from_weights(alphabet, horizon, joint))
    }

    pub(crate) fn from_weights(alphabet: Alphabet, horizon: usize, joint: Vec<f64>) -> Self {
        let ny = alphabet.size();
        let steps = horizon + 1;
        let mut prefix = vec![joint.clone()];
        for _ in 1..steps {
            let shorter = prefix
                .last()
                .unwrap()
                .chunks(ny)
                .map(|c| compensated_sum(c.iter().copied()))
                .collect();
            prefix.push(shorter);
        }
        prefix.reverse();
        let mut conditionals = Vec::with_capacity(steps);
        let mut unreachable = Vec::with_capacity(steps);
        for i in 0..steps {
            let hist = index::count(ny, i);
            let mut probs = Vec::with_capacity(hist * ny);
            let mut flags = Vec::with_capacity(hist);
            for h in 0..hist {
                let row = &prefix[i][h * ny..(h + 1) * ny];
                let mass = compensated_sum(row.iter().copied());
                if mass > 0.0 {
                    probs.extend(row.iter().map(|w| w / mass));
                    flags.push(false);
                } else {
                    probs.extend(std::iter::repeat_n(1.0 / ny as f64, ny));
                    flags.push(true);
                }
            }
            conditionals.push(ConditionalKernel::from_flat_unchecked(ny, probs));
            unreachable.push(flags);
        }
        OutputProcess {
            alphabet,
            horizon,
            joint,
            conditionals,
            unreachable,
        }
    }

    #[inline]
    pub fn alphabet(&self) -> Alphabet {
        self.alphabet
    }

    #[inline]
    pub fn horizon(&self) -> usize {
        self.horizon
    }

    /// `nu(y^n)` over all output trajectories.
    #[inline]
    pub fn joint(&self) -> &[f64] {
        &self.joint
    }

    /// Stage-`i` conditionals, one row per `y^{i-1}`.
    pub fn conditionals(&self) -> &[ConditionalKernel] {
        &self.conditionals
    }

    #[inline]
    pub fn conditional_row(&self, i: usize, y_prev: usize) -> &[f64] {
        self.conditionals[i].row(y_prev)
    }

    pub fn is_unreachable(&self, i: usize, y_prev: usize) -> bool {
        self.unreachable[i][y_prev]
    }

    /// Product of the conditionals along `y`.
    pub fn chain_prob(&self, y: usize) -> f64 {
        let (ny, m) = (self.alphabet.size(), self.horizon + 1);
        (0..m)
            .map(|i| self.conditionals[i].prob(index::prefix(y, ny, m, i), index::digit(y, ny, m, i)))
            .product()
    }

    /// Draws an output trajectory symbol by symbol from the conditionals.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let ny = self.alphabet.size();
        let mut idx = 0;
        for i in 0..=self.horizon {
            let y = sample_row(self.conditionals[i].row(idx), rng);
            idx = idx * ny + y;
        }
        idx
    }
}

pub(crate) fn sample_row<R: Rng + ?Sized>(row: &[f64], rng: &mut R) -> usize {
    let u = rng.gen::<f64>();
    let mut acc = 0.0;
    for (k, &w) in row.iter().enumerate() {
        acc += w;
        if u < acc && w > 0.0 {
            return k;
        }
    }
    // roundoff: fall back to the last symbol with positive mass
    row.iter().rposition(|&w| w > 0.0).unwrap_or(row.len() - 1)
}

/// Prefix joints `P_i(x^i, y^i)` for `i = 0..=n`, each laid out as
/// `x_pre * |Y|^(i+1) + y_pre`. The last table is the full joint.
pub fn prefix_joints(source: &SourceModel, chain: &CausalKernelChain) -> Result<Vec<Vec<f64>>> {
    let shape = chain.shape();
    check_source(source, &shape)?;
    shape.check_joint()?;
    let (nx, ny) = (shape.nx(), shape.ny());
    let mut tables: Vec<Vec<f64>> = Vec::with_capacity(shape.steps());
    for i in 0..shape.steps() {
        let xs_prev = index::count(nx, i);
        let ys_prev = index::count(ny, i);
        let ys_cur = ys_prev * ny;
        let mut cur = vec![0.0; xs_prev * nx * ys_cur];
        for xp in 0..xs_prev {
            for x in 0..nx {
                let xi = xp * nx + x;
                let mu = source.conditional(i, xp, x);
                if mu == 0.0 {
                    continue;
                }
                for yp in 0..ys_prev {
                    let prev = if i == 0 { 1.0 } else { tables[i - 1][xp * ys_prev + yp] };
                    let w = prev * mu;
                    if w == 0.0 {
                        continue;
                    }
                    let row = chain.row(i, yp, xi);
                    let base = xi * ys_cur + yp * ny;
                    for (y, &q) in row.iter().enumerate() {
                        cur[base + y] = w * q;
                    }
                }
            }
        }
        tables.push(cur);
    }
    Ok(tables)
}

pub(crate) fn check_source(source: &SourceModel, shape: &Shape) -> Result<()> {
    if source.alphabet() != shape.source || source.horizon() != shape.horizon {
        return Err(Error::Shape(format!(
            "source is over {} symbols with horizon {}, kernel expects {} symbols with horizon {}",
            source.alphabet().size(),
            source.horizon(),
            shape.nx(),
            shape.horizon
        )));
    }
    Ok(())
}

/// `P(x^n, y^n) = mu(x^n) * prod_i q_i(y_i | y^{i-1}, x^i)`.
pub fn make_joint(source: &SourceModel, chain: &CausalKernelChain) -> Result<JointMeasure> {
    let mut tables = prefix_joints(source, chain)?;
    Ok(JointMeasure {
        shape: chain.shape(),
        pmf: tables.pop().unwrap(),
        provenance: Provenance::Convolution,
    })
}

/// `P(x^n, y^n) = mu(x^n) q(y^n | x^n)` for an arbitrary kernel.
pub fn make_joint_general(source: &SourceModel, kernel: &GeneralKernel) -> Result<JointMeasure> {
    let shape = kernel.shape();
    check_source(source, &shape)?;
    let ys = shape.y_paths();
    let mut pmf = vec![0.0; shape.joint_len()];
    for (x, &mu) in source.joint().iter().enumerate() {
        for (y, &q) in kernel.row(x).iter().enumerate() {
            pmf[x * ys + y] = mu * q;
        }
    }
    Ok(JointMeasure {
        shape,
        pmf,
        provenance: Provenance::Convolution,
    })
}

/// Output marginal of a joint, with chain-rule conditionals.
pub fn output_marginal(joint: &JointMeasure) -> OutputProcess {
    let shape = joint.shape();
    OutputProcess::from_weights(shape.reproduction, shape.horizon, joint.y_marginal())
}

/// Output process from prefix tables produced by [`prefix_joints`].
pub(crate) fn output_from_prefixes(shape: Shape, tables: &[Vec<f64>]) -> OutputProcess {
    let ys = shape.y_paths();
    let full = &tables[shape.horizon];
    let nu = (0..ys)
        .map(|y| compensated_sum((0..shape.x_paths()).map(|x| full[x * ys + y])))
        .collect();
    OutputProcess::from_weights(shape.reproduction, shape.horizon, nu)
}

/// `pi(x^n, y^n) = mu(x^n) nu(y^n)`.
pub fn product_measure(source: &SourceModel, output: &OutputProcess) -> Result<JointMeasure> {
    if source.horizon() != output.horizon() {
        return Err(Error::Shape(format!(
            "source horizon {} vs output horizon {}",
            source.horizon(),
            output.horizon()
        )));
    }
    let shape = Shape {
        source: source.alphabet(),
        reproduction: output.alphabet(),
        horizon: source.horizon(),
    };
    shape.check_joint()?;
    let pmf = source
        .joint()
        .iter()
        .flat_map(|&mu| output.joint().iter().map(move |&nu| mu * nu))
        .collect();
    Ok(JointMeasure {
        shape,
        pmf,
        provenance: Provenance::Product,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bsc(p: f64) -> ConditionalKernel {
        ConditionalKernel::try_from(vec![vec![1.0 - p, p], vec![p, 1.0 - p]]).unwrap()
    }

    fn uniform_binary(n: usize) -> SourceModel {
        SourceModel::iid(FinitePmf::uniform(2), n).unwrap()
    }

    #[test]
    fn identity_channel_joint() {
        let shape = Shape::new(2, 2, 0).unwrap();
        let j = make_joint(&uniform_binary(0), &CausalKernelChain::identity(shape).unwrap()).unwrap();
        assert_eq!(j.pmf(), &[0.5, 0.0, 0.0, 0.5]);
        assert_eq!(output_marginal(&j).joint(), &[0.5, 0.5]);
    }

    #[test]
    fn constant_channel_joint_is_uniform() {
        let shape = Shape::new(2, 2, 0).unwrap();
        let chain = CausalKernelChain::constant(shape, &FinitePmf::uniform(2)).unwrap();
        let j = make_joint(&uniform_binary(0), &chain).unwrap();
        assert_eq!(j.pmf(), &[0.25; 4]);
    }

    #[test]
    fn bsc_joint_n1_by_agreement_count() {
        let shape = Shape::new(2, 2, 1).unwrap();
        let chain = CausalKernelChain::memoryless(shape, bsc(0.1)).unwrap();
        let j = make_joint(&uniform_binary(1), &chain).unwrap();
        for x in 0..4usize {
            for y in 0..4usize {
                let agree = 2 - (x ^ y).count_ones() as i32;
                let expected = 0.25 * 0.9f64.powi(agree) * 0.1f64.powi(2 - agree);
                assert!((j.prob(x, y) - expected).abs() < 1e-15);
            }
        }
        let nu = output_marginal(&j);
        for &w in nu.joint() {
            assert!((w - 0.25).abs() < 1e-15);
        }
    }

    #[test]
    fn constant_zero_output() {
        let shape = Shape::new(2, 2, 2).unwrap();
        let chain = CausalKernelChain::constant(shape, &FinitePmf::point(2, 0)).unwrap();
        let nu = output_marginal(&make_joint(&uniform_binary(2), &chain).unwrap());
        assert_eq!(nu.joint()[0], 1.0);
        assert!(nu.is_unreachable(1, 1));
        assert!(!nu.is_unreachable(1, 0));
        assert_eq!(nu.conditional_row(2, 3), &[0.5, 0.5]);
    }

    #[test]
    fn product_masses() {
        let mu = SourceModel::iid(FinitePmf::bernoulli(0.9).unwrap(), 0).unwrap();
        let nu = OutputProcess::iid(&FinitePmf::uniform(2), 0).unwrap();
        let pi = product_measure(&mu, &nu).unwrap();
        assert_eq!(pi.provenance(), Provenance::Product);
        let expected = [0.05, 0.05, 0.45, 0.45];
        for (a, b) in pi.pmf().iter().zip(expected) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn shape_mismatch_rejected() {
        let chain = CausalKernelChain::identity(Shape::new(2, 2, 1).unwrap()).unwrap();
        assert!(matches!(make_joint(&uniform_binary(2), &chain), Err(Error::Shape(_))));
        let ternary = SourceModel::iid(FinitePmf::uniform(3), 1).unwrap();
        assert!(matches!(make_joint(&ternary, &chain), Err(Error::Shape(_))));
    }

    #[test]
    fn general_and_chain_joints_agree() {
        use rand::SeedableRng;
        let shape = Shape::new(3, 2, 2).unwrap();
        let chain = CausalKernelChain::random(shape, &mut rand_chacha::ChaCha8Rng::seed_from_u64(2));
        let src = SourceModel::symmetric_markov(3, 0.3, 2).unwrap();
        let a = make_joint(&src, &chain).unwrap();
        let b = make_joint_general(&src, &chain.expand().unwrap()).unwrap();
        for (p, q) in a.pmf().iter().zip(b.pmf()) {
            assert!((p - q).abs() < 1e-15);
        }
    }
}
