use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::pairs::sample_output_given;
use crate::error::{Error, Result};
use crate::prob::{index, CausalKernelChain, OutputProcess, SourceModel};

pub const DEFAULT_CODEBOOK_CAP: usize = 1 << 20;

/// Codewords are output trajectory indices over `Y^{0..n}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Codebook {
    pub horizon: usize,
    pub seed: u64,
    pub codewords: Vec<usize>,
}

impl Codebook {
    pub fn len(&self) -> usize {
        self.codewords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codewords.is_empty()
    }

    /// Codeword of least `cost`; ties go to the lowest index.
    pub fn encode(&self, mut cost: impl FnMut(usize) -> f64) -> (usize, f64) {
        let mut best = (0, f64::INFINITY);
        for (w, &y) in self.codewords.iter().enumerate() {
            let c = cost(y);
            if c < best.1 {
                best = (w, c);
            }
        }
        best
    }

    /// Symbol `y_i` of codeword `w`; the per-letter decoder at time `i`.
    pub fn decode(&self, w: usize, i: usize, alphabet: usize) -> usize {
        index::digit(self.codewords[w], alphabet, self.horizon + 1, i)
    }
}

/// `ceil(2^{(n+1) rate})`, at most `cap`.
pub fn codebook_size(rate: f64, horizon: usize, cap: usize) -> Result<usize> {
    if !(rate >= 0.0 && rate.is_finite()) {
        return Err(Error::invalid("rate", "must be finite and >= 0"));
    }
    let size = ((horizon + 1) as f64 * rate).exp2().ceil();
    if size > cap as f64 {
        return Err(Error::Capacity {
            what: "codebook size".into(),
            needed: if size < u128::MAX as f64 {
                size as u128
            } else {
                u128::MAX
            },
            limit: cap as u128,
        });
    }
    Ok((size as usize).max(1))
}

/// Iid draws from the output law `output`.
pub fn generate_codebook(output: &OutputProcess, rate: f64, horizon: usize, seed: u64) -> Result<Codebook> {
    if output.horizon() != horizon {
        return Err(Error::Shape(format!(
            "output law has horizon {}, codebook asks for {horizon}",
            output.horizon()
        )));
    }
    let size = codebook_size(rate, horizon, DEFAULT_CODEBOOK_CAP)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(Codebook {
        horizon,
        seed,
        codewords: (0..size).map(|_| output.sample(&mut rng)).collect(),
    })
}

/// Iid draws from the output law of `chain` driven by `source`, sampled as
/// `x^n ~ mu` then `y^n ~ q(. | x^n)`, so the law itself is never tabulated.
pub fn sample_codebook(
    source: &SourceModel,
    chain: &CausalKernelChain,
    size: usize,
    rng: &mut ChaCha8Rng,
    seed: u64,
) -> Codebook {
    Codebook {
        horizon: chain.shape().horizon,
        seed,
        codewords: (0..size)
            .map(|_| {
                let x = source.sample(rng);
                sample_output_given(chain, x, rng)
            })
            .collect(),
    }
}
