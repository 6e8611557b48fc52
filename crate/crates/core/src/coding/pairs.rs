use rand::Rng;
use rayon::prelude::*;

use crate::distortion::DistortionModel;
use crate::error::{Error, Result};
use crate::info::mutual_information;
use crate::prob::{
    check_source, index, index::MAX_TABLE, make_joint, sample_row, CausalKernelChain, ChainStage, Shape, SourceModel,
};

/// Draws `y^n` from the chain given the source trajectory `x`.
pub fn sample_output_given<R: Rng + ?Sized>(chain: &CausalKernelChain, x: usize, rng: &mut R) -> usize {
    let shape = chain.shape();
    let (nx, ny, m) = (shape.nx(), shape.ny(), shape.steps());
    let mut y = 0;
    for i in 0..m {
        let row = chain.row(i, y, index::prefix(x, nx, m, i + 1));
        y = y * ny + sample_row(row, rng);
    }
    y
}

/// Source, causal chain and distortion seen as a law on trajectory pairs.
/// Evaluates the information density and distortion of single pairs
/// without materializing the joint.
#[derive(Clone, Debug)]
pub struct PairModel {
    source: SourceModel,
    chain: CausalKernelChain,
    dist: DistortionModel,
    /// Per-letter output law when the source is iid and every stage is the same per-letter kernel.
    letter_output: Option<Vec<f64>>,
    /// `nu(y^n)` for every output trajectory, when not memoryless.
    output: Option<Vec<f64>>,
}

impl PairModel {
    pub fn new(source: &SourceModel, chain: &CausalKernelChain, dist: &DistortionModel) -> Result<Self> {
        let shape = chain.shape();
        check_source(source, &shape)?;
        dist.shape().ensure_same(&shape, "distortion model and chain")?;
        let letter_output = memoryless_letter(source, chain);
        let output = match letter_output {
            Some(_) => None,
            None => Some(output_law(source, chain)?),
        };
        Ok(PairModel {
            source: source.clone(),
            chain: chain.clone(),
            dist: dist.clone(),
            letter_output,
            output,
        })
    }

    pub fn shape(&self) -> Shape {
        self.chain.shape()
    }

    pub fn source(&self) -> &SourceModel {
        &self.source
    }

    pub fn chain(&self) -> &CausalKernelChain {
        &self.chain
    }

    pub fn distortion_model(&self) -> &DistortionModel {
        &self.dist
    }

    pub fn is_memoryless(&self) -> bool {
        self.letter_output.is_some()
    }

    /// `nu(y^n)`.
    pub fn output_prob(&self, y: usize) -> f64 {
        match (&self.letter_output, &self.output) {
            (Some(letter), _) => {
                let (ny, m) = (self.shape().ny(), self.shape().steps());
                (0..m).map(|i| letter[index::digit(y, ny, m, i)]).product()
            }
            (None, Some(nu)) => nu[y],
            (None, None) => unreachable!("one of the output forms is always set"),
        }
    }

    /// `log2 q(y^n | x^n) / nu(y^n)`; needs `P(x^n, y^n) > 0`.
    pub fn density(&self, x: usize, y: usize) -> Result<f64> {
        let q = self.chain.path_prob(x, y);
        if q == 0.0 || self.source.joint()[x] == 0.0 {
            return Err(Error::Domain(format!("pair ({x}, {y}) has zero probability")));
        }
        Ok((q / self.output_prob(y)).log2())
    }

    /// Exact `(I(X^n -> Y^n), E d_{0,n})` for memoryless models; `None` otherwise.
    pub fn closed_form_means(&self) -> Option<(f64, f64)> {
        self.letter_output.as_ref()?;
        let one = Shape::new(self.shape().nx(), self.shape().ny(), 0).ok()?;
        let src = self.source.with_horizon(0).ok()?;
        let chain = CausalKernelChain::new(one, vec![self.chain.stages()[0].clone()]).ok()?;
        let dist = self.dist.with_horizon(0).ok()?;
        let joint = make_joint(&src, &chain).ok()?;
        let info = mutual_information(&joint);
        let d = crate::distortion::average_distortion(&joint, &dist).ok()?;
        Some((info * self.shape().steps() as f64, d))
    }
}

fn memoryless_letter(source: &SourceModel, chain: &CausalKernelChain) -> Option<Vec<f64>> {
    if !source.is_iid() {
        return None;
    }
    let first = match &chain.stages()[0] {
        ChainStage::PerLetter(k) => k,
        ChainStage::Table(_) => return None,
    };
    if chain.stages().iter().any(|s| s != &chain.stages()[0]) {
        return None;
    }
    let (nx, ny) = (chain.shape().nx(), chain.shape().ny());
    let mu = source.prefix_marginal(0);
    Some(
        (0..ny)
            .map(|y| (0..nx).map(|x| mu[x] * first.prob(x, y)).sum())
            .collect(),
    )
}

/// `nu(y^n) = sum_x mu(x^n) q(y^n | x^n)`, by a forward pass over source
/// prefixes for each output trajectory.
fn output_law(source: &SourceModel, chain: &CausalKernelChain) -> Result<Vec<f64>> {
    let shape = chain.shape();
    let (nx, ny, m) = (shape.nx(), shape.ny(), shape.steps());
    let ys = index::checked_count(ny, m, "output trajectories")?;
    let xs = index::checked_count(nx, m, "source trajectories")?;
    if xs > MAX_TABLE {
        return Err(Error::Capacity {
            what: "source trajectories".into(),
            needed: xs as u128,
            limit: MAX_TABLE as u128,
        });
    }
    Ok((0..ys)
        .into_par_iter()
        .map(|y| {
            let mut alpha = vec![1.0];
            for i in 0..m {
                let yp = index::prefix(y, ny, m, i);
                let yi = index::digit(y, ny, m, i);
                let mut next = vec![0.0; alpha.len() * nx];
                for (xp, &a) in alpha.iter().enumerate() {
                    if a == 0.0 {
                        continue;
                    }
                    for x in 0..nx {
                        let xi = xp * nx + x;
                        next[xi] = a * source.conditional(i, xp, x) * chain.row(i, yp, xi)[yi];
                    }
                }
                alpha = next;
            }
            crate::prob::compensated_sum(alpha)
        })
        .collect())
}
