use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::pairs::{sample_output_given, PairModel};
use crate::error::{Error, Result};
use crate::prob::{compensated_sum, index};

/// Largest number of trajectory pairs enumerated exactly (`4^12`).
pub const EXACT_PAIR_LIMIT: u128 = 1 << 24;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TypicalityMethod {
    /// Exact when the pair count allows, else Monte Carlo.
    #[default]
    Auto,
    Exact,
    MonteCarlo,
}

/// Typical sets of a causal pair model. The information set tests
/// `|Λ/(n+1) - I(X^n -> Y^n)/(n+1)| < ε`; the distortion set tests
/// `|d_{0,n} - E d_{0,n}| < ε`.
#[derive(Clone, Debug)]
pub struct TypicalitySpec {
    pub epsilon: f64,
    pub model: PairModel,
    pub method: TypicalityMethod,
    pub samples: usize,
    pub seed: u64,
}

impl TypicalitySpec {
    pub fn new(epsilon: f64, model: PairModel) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::invalid("epsilon", "must be positive and finite"));
        }
        Ok(TypicalitySpec {
            epsilon,
            model,
            method: TypicalityMethod::Auto,
            samples: 10_000,
            seed: 0,
        })
    }

    pub fn pair_count(&self) -> u128 {
        let shape = self.model.shape();
        (shape.x_paths() as u128) * (shape.y_paths() as u128)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TypicalityResult {
    pub exact: bool,
    pub p_information: f64,
    pub p_distortion: f64,
    /// Standard errors; zero when exact.
    pub se_information: f64,
    pub se_distortion: f64,
    pub samples: usize,
    /// `I(X^n -> Y^n)` in bits, unnormalized.
    pub directed_information: f64,
    pub mean_distortion: f64,
}

/// `|Λ/(n+1) - I/(n+1)| < ε` with `Λ` and `I` unnormalized.
pub fn is_information_typical(lambda: f64, directed: f64, steps: usize, epsilon: f64) -> bool {
    ((lambda - directed) / steps as f64).abs() < epsilon
}

/// `|d - E d| < ε` with `d` already normalized.
pub fn is_distortion_typical(d: f64, mean: f64, epsilon: f64) -> bool {
    (d - mean).abs() < epsilon
}

/// Sum over all pairs with positive mass of `f(p, Λ, d)` where `d` is the
/// normalized distortion; pairs are walked per source trajectory without
/// materializing the joint.
fn enumerate<F>(model: &PairModel, f: F) -> Vec<f64>
where
    F: Fn(f64, f64, f64) -> [f64; 2] + Sync,
{
    let shape = model.shape();
    let (nx, ny, m) = (shape.nx(), shape.ny(), shape.steps());
    let chain = model.chain();
    let dist = model.distortion_model();
    let partial: Vec<[f64; 2]> = model
        .source()
        .joint()
        .par_iter()
        .enumerate()
        .filter(|(_, mu)| **mu > 0.0)
        .map(|(x, &mu)| {
            let mut terms: [Vec<f64>; 2] = [Vec::new(), Vec::new()];
            let mut stack = vec![(0usize, 0usize, 1.0f64, 0.0f64)];
            while let Some((i, y_pre, q, rho)) = stack.pop() {
                if i == m {
                    let lambda = (q / model.output_prob(y_pre)).log2();
                    let v = f(mu * q, lambda, rho / m as f64);
                    terms[0].push(v[0]);
                    terms[1].push(v[1]);
                    continue;
                }
                let x_pre = index::prefix(x, nx, m, i + 1);
                for (y, &p) in chain.row(i, y_pre, x_pre).iter().enumerate() {
                    if p > 0.0 {
                        let yi = y_pre * ny + y;
                        stack.push((i + 1, yi, q * p, rho + dist.rho(i, x_pre, yi)));
                    }
                }
            }
            [compensated_sum(terms[0].drain(..)), compensated_sum(terms[1].drain(..))]
        })
        .collect();
    vec![
        compensated_sum(partial.iter().map(|v| v[0])),
        compensated_sum(partial.iter().map(|v| v[1])),
    ]
}

/// `(I(X^n -> Y^n), E d_{0,n})`, exactly: in closed form for memoryless
/// models, otherwise by enumeration.
pub(crate) fn typicality_means(spec: &TypicalitySpec) -> Result<(f64, f64)> {
    let enumerable = spec.pair_count() <= EXACT_PAIR_LIMIT;
    if let Some(m) = spec.model.closed_form_means() {
        return Ok(m);
    }
    if !enumerable {
        return Err(Error::Capacity {
            what: "trajectory pairs for exact means of a model with memory".into(),
            needed: spec.pair_count(),
            limit: EXACT_PAIR_LIMIT,
        });
    }
    let v = enumerate(&spec.model, |p, lambda, d| [p * lambda, p * d]);
    Ok((v[0], v[1]))
}

/// `P(T_ε)` and `P(D_ε)` under the pair model.
pub fn typicality_probability(spec: &TypicalitySpec) -> Result<TypicalityResult> {
    let enumerable = spec.pair_count() <= EXACT_PAIR_LIMIT;
    let exact = match spec.method {
        TypicalityMethod::Auto => enumerable,
        TypicalityMethod::Exact if !enumerable => {
            return Err(Error::Capacity {
                what: "trajectory pairs".into(),
                needed: spec.pair_count(),
                limit: EXACT_PAIR_LIMIT,
            })
        }
        TypicalityMethod::Exact => true,
        TypicalityMethod::MonteCarlo => false,
    };
    let (directed, mean_d) = typicality_means(spec)?;
    let (eps, steps) = (spec.epsilon, spec.model.shape().steps());
    if exact {
        let v = enumerate(&spec.model, |p, lambda, d| {
            [
                if is_information_typical(lambda, directed, steps, eps) {
                    p
                } else {
                    0.0
                },
                if is_distortion_typical(d, mean_d, eps) { p } else { 0.0 },
            ]
        });
        return Ok(TypicalityResult {
            exact: true,
            p_information: v[0].min(1.0),
            p_distortion: v[1].min(1.0),
            se_information: 0.0,
            se_distortion: 0.0,
            samples: 0,
            directed_information: directed,
            mean_distortion: mean_d,
        });
    }
    if spec.samples == 0 {
        return Err(Error::invalid("samples", "must be at least 1"));
    }
    let hits: Vec<(bool, bool)> = (0..spec.samples)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            rng.set_stream(k as u64);
            let x = spec.model.source().sample(&mut rng);
            let y = sample_output_given(spec.model.chain(), x, &mut rng);
            let lambda = spec.model.density(x, y).expect("sampled pairs have positive mass");
            let d = spec.model.distortion_model().path_distortion(x, y);
            (
                is_information_typical(lambda, directed, steps, eps),
                is_distortion_typical(d, mean_d, eps),
            )
        })
        .collect();
    let n = spec.samples as f64;
    let pt = hits.iter().filter(|h| h.0).count() as f64 / n;
    let pd = hits.iter().filter(|h| h.1).count() as f64 / n;
    Ok(TypicalityResult {
        exact: false,
        p_information: pt,
        p_distortion: pd,
        se_information: (pt * (1.0 - pt) / n).sqrt(),
        se_distortion: (pd * (1.0 - pd) / n).sqrt(),
        samples: spec.samples,
        directed_information: directed,
        mean_distortion: mean_d,
    })
}
