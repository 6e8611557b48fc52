use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::codebook::{codebook_size, sample_codebook, DEFAULT_CODEBOOK_CAP};
use super::pairs::{sample_output_given, PairModel};
use super::typical::{is_distortion_typical, is_information_typical, TypicalitySpec};
use crate::distortion::DistortionModel;
use crate::error::{Error, Result};
use crate::prob::{CausalKernelChain, SourceModel};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimParams {
    /// Bits per symbol.
    pub rate: f64,
    pub trials: usize,
    pub epsilon: f64,
    pub seed: u64,
    pub codebook_cap: usize,
    /// Reported only.
    pub target_distortion: Option<f64>,
}

impl Default for SimParams {
    fn default() -> Self {
        SimParams {
            rate: 0.0,
            trials: 1000,
            epsilon: 0.05,
            seed: 0,
            codebook_cap: DEFAULT_CODEBOOK_CAP,
            target_distortion: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub horizon: usize,
    pub trials: usize,
    pub rate: f64,
    pub codebook_size: usize,
    pub target_distortion: Option<f64>,
    pub mean_distortion: f64,
    pub distortion_se: f64,
    pub typicality_t: f64,
    pub typicality_d: f64,
    pub typicality_t_se: f64,
    pub typicality_d_se: f64,
    pub epsilon: f64,
}

/// Per trial, with a generator seeded from `(seed, trial)`: draw a fresh
/// codebook from the output law of `chain`, draw `x^n` from the source and
/// encode it to the codeword of least distortion; separately draw a pair
/// from the joint and test it against both typical sets.
///
/// The code sends one index per block and reproduces `y_i` from that index
/// alone, so each reproduction coder is causal in the block sense.
pub fn simulate(
    source: &SourceModel,
    dist: &DistortionModel,
    chain: &CausalKernelChain,
    params: &SimParams,
) -> Result<SimReport> {
    if params.trials == 0 {
        return Err(Error::invalid("trials", "must be at least 1"));
    }
    let model = PairModel::new(source, chain, dist)?;
    let spec = TypicalitySpec::new(params.epsilon, model)?;
    let horizon = chain.shape().horizon;
    let size = codebook_size(params.rate, horizon, params.codebook_cap)?;
    let (directed, mean_d) = super::typical::typicality_means(&spec)?;
    let steps = chain.shape().steps();
    let outcomes: Vec<(f64, bool, bool)> = (0..params.trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
            rng.set_stream(t as u64);
            let book = sample_codebook(source, chain, size, &mut rng, params.seed);
            let x = source.sample(&mut rng);
            let (_, d) = book.encode(|y| dist.path_distortion(x, y));
            let xp = source.sample(&mut rng);
            let yp = sample_output_given(chain, xp, &mut rng);
            let lambda = spec.model.density(xp, yp).expect("sampled pairs have positive mass");
            (
                d,
                is_information_typical(lambda, directed, steps, params.epsilon),
                is_distortion_typical(dist.path_distortion(xp, yp), mean_d, params.epsilon),
            )
        })
        .collect();
    let n = params.trials as f64;
    let mean = crate::prob::compensated_sum(outcomes.iter().map(|o| o.0)) / n;
    let var = crate::prob::compensated_sum(outcomes.iter().map(|o| (o.0 - mean).powi(2))) / (n - 1.0).max(1.0);
    let pt = outcomes.iter().filter(|o| o.1).count() as f64 / n;
    let pd = outcomes.iter().filter(|o| o.2).count() as f64 / n;
    Ok(SimReport {
        horizon,
        trials: params.trials,
        rate: params.rate,
        codebook_size: size,
        target_distortion: params.target_distortion,
        mean_distortion: mean,
        distortion_se: (var / n).sqrt(),
        typicality_t: pt,
        typicality_d: pd,
        typicality_t_se: (pt * (1.0 - pt) / n).sqrt(),
        typicality_d_se: (pd * (1.0 - pd) / n).sqrt(),
        epsilon: params.epsilon,
    })
}
