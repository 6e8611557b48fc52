use rand::Rng;
use serde::{Deserialize, Serialize};

use super::index;
use super::kernel::ConditionalKernel;
use super::pmf::{compensated_sum, Alphabet, FinitePmf};
use crate::error::{Error, Result};

/// How a source law over `X^{0..n}` is parameterized.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SourceSpec {
    Iid {
        pmf: FinitePmf,
    },
    /// First-order Markov chain; `transition` row `a` is `P(x_i = . | x_{i-1} = a)`.
    Markov {
        initial: FinitePmf,
        transition: ConditionalKernel,
    },
    /// Full pmf over trajectories in mixed-radix order.
    Explicit {
        alphabet: usize,
        joint: FinitePmf,
    },
}

/// Source law `mu_{0,n}`. The trajectory pmf is expanded once at construction;
/// the source never depends on the reproduction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSource", into = "RawSource")]
pub struct SourceModel {
    spec: SourceSpec,
    alphabet: Alphabet,
    horizon: usize,
    /// `prefix[i]` is the marginal of `x^i`, length `|X|^(i+1)`; `prefix[n]` is the joint.
    prefix: Vec<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
struct RawSource {
    horizon: usize,
    #[serde(flatten)]
    spec: SourceSpec,
}

impl TryFrom<RawSource> for SourceModel {
    type Error = Error;

    fn try_from(raw: RawSource) -> Result<Self> {
        SourceModel::new(raw.spec, raw.horizon)
    }
}

impl From<SourceModel> for RawSource {
    fn from(s: SourceModel) -> Self {
        RawSource {
            horizon: s.horizon,
            spec: s.spec,
        }
    }
}

impl SourceModel {
    pub fn new(spec: SourceSpec, horizon: usize) -> Result<Self> {
        let steps = horizon + 1;
        let (alphabet, joint) = match &spec {
            SourceSpec::Iid { pmf } => {
                let nx = pmf.len();
                index::checked_count(nx, steps, "source trajectories")?;
                let mut joint = vec![1.0];
                for _ in 0..steps {
                    joint = extend(&joint, nx, |_, x| pmf.prob(x));
                }
                (nx, joint)
            }
            SourceSpec::Markov { initial, transition } => {
                let nx = initial.len();
                if transition.rows() != nx || transition.out() != nx {
                    return Err(Error::Shape(format!(
                        "Markov transition must be {nx}x{nx}, got {}x{}",
                        transition.rows(),
                        transition.out()
                    )));
                }
                index::checked_count(nx, steps, "source trajectories")?;
                let mut joint = initial.weights().to_vec();
                for _ in 1..steps {
                    joint = extend(&joint, nx, |prev, x| transition.prob(prev % nx, x));
                }
                (nx, joint)
            }
            SourceSpec::Explicit { alphabet, joint } => {
                let expected = index::checked_count(*alphabet, steps, "source trajectories")?;
                if joint.len() != expected {
                    return Err(Error::Shape(format!(
                        "explicit source over {alphabet} symbols and horizon {horizon} needs {expected} atoms, got {}",
                        joint.len()
                    )));
                }
                (*alphabet, joint.weights().to_vec())
            }
        };
        let alphabet = Alphabet::new(alphabet)?;
        let prefix = prefix_marginals(joint, alphabet.size(), steps);
        let total = compensated_sum(prefix[horizon].iter().copied());
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidPmf(format!("source joint sums to {total}")));
        }
        Ok(SourceModel {
            spec,
            alphabet,
            horizon,
            prefix,
        })
    }

    pub fn iid(pmf: FinitePmf, horizon: usize) -> Result<Self> {
        Self::new(SourceSpec::Iid { pmf }, horizon)
    }

    pub fn markov(initial: FinitePmf, transition: ConditionalKernel, horizon: usize) -> Result<Self> {
        Self::new(SourceSpec::Markov { initial, transition }, horizon)
    }

    /// Stationary symmetric Markov source: uniform start, symbol kept with
    /// probability `1 - flip` and otherwise replaced uniformly by one of the others.
    pub fn symmetric_markov(alphabet: usize, flip: f64, horizon: usize) -> Result<Self> {
        if alphabet < 2 {
            return Err(Error::invalid(
                "alphabet",
                "symmetric Markov source needs at least 2 symbols",
            ));
        }
        let rows = (0..alphabet)
            .map(|a| {
                let w = (0..alphabet)
                    .map(|b| {
                        if a == b {
                            1.0 - flip
                        } else {
                            flip / (alphabet - 1) as f64
                        }
                    })
                    .collect();
                FinitePmf::new(w)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::markov(
            FinitePmf::uniform(alphabet),
            ConditionalKernel::from_rows(rows)?,
            horizon,
        )
    }

    pub fn explicit(alphabet: usize, joint: FinitePmf, horizon: usize) -> Result<Self> {
        Self::new(SourceSpec::Explicit { alphabet, joint }, horizon)
    }

    pub fn spec(&self) -> &SourceSpec {
        &self.spec
    }

    pub fn kind(&self) -> &'static str {
        match self.spec {
            SourceSpec::Iid { .. } => "iid",
            SourceSpec::Markov { .. } => "markov",
            SourceSpec::Explicit { .. } => "explicit",
        }
    }

    pub fn is_iid(&self) -> bool {
        matches!(self.spec, SourceSpec::Iid { .. })
    }

    #[inline]
    pub fn alphabet(&self) -> Alphabet {
        self.alphabet
    }

    #[inline]
    pub fn horizon(&self) -> usize {
        self.horizon
    }

    /// Pmf over `X^{0..n}`.
    #[inline]
    pub fn joint(&self) -> &[f64] {
        &self.prefix[self.horizon]
    }

    /// Marginal of `x^i` (length `|X|^(i+1)`).
    #[inline]
    pub fn prefix_marginal(&self, i: usize) -> &[f64] {
        &self.prefix[i]
    }

    /// `mu(x_i | x^{i-1})`, or 0 when the history has no mass.
    #[inline]
    pub fn conditional(&self, i: usize, x_prev: usize, x: usize) -> f64 {
        let nx = self.alphabet.size();
        let num = self.prefix[i][x_prev * nx + x];
        if i == 0 {
            return num;
        }
        let den = self.prefix[i - 1][x_prev];
        if den > 0.0 {
            num / den
        } else {
            0.0
        }
    }

    /// Same law over a different horizon; only iid and Markov sources extend.
    pub fn with_horizon(&self, horizon: usize) -> Result<Self> {
        match self.spec {
            SourceSpec::Explicit { .. } if horizon != self.horizon => Err(Error::invalid(
                "horizon",
                "an explicit source cannot be re-expanded to another horizon",
            )),
            _ => Self::new(self.spec.clone(), horizon),
        }
    }

    /// Draws a trajectory index by sequential conditioning.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let nx = self.alphabet.size();
        let mut idx = 0usize;
        let mut mass = 1.0;
        for i in 0..=self.horizon {
            let row = &self.prefix[i][idx * nx..(idx + 1) * nx];
            let u = rng.gen::<f64>() * mass;
            let mut acc = 0.0;
            let mut pick = nx - 1;
            for (x, &w) in row.iter().enumerate() {
                acc += w;
                if u < acc && w > 0.0 {
                    pick = x;
                    break;
                }
            }
            while row[pick] == 0.0 && pick > 0 {
                pick -= 1;
            }
            mass = row[pick];
            idx = idx * nx + pick;
        }
        idx
    }
}

fn extend<F: Fn(usize, usize) -> f64>(prev: &[f64], nx: usize, p: F) -> Vec<f64> {
    let mut out = Vec::with_capacity(prev.len() * nx);
    for (i, &w) in prev.iter().enumerate() {
        for x in 0..nx {
            out.push(w * p(i, x));
        }
    }
    out
}

fn prefix_marginals(joint: Vec<f64>, nx: usize, steps: usize) -> Vec<Vec<f64>> {
    let mut prefix = vec![joint];
    for _ in 1..steps {
        let last = prefix.last().unwrap();
        let shorter: Vec<f64> = last.chunks(nx).map(|c| compensated_sum(c.iter().copied())).collect();
        prefix.push(shorter);
    }
    prefix.reverse();
    prefix
}
