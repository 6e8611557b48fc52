use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on the total mass of a [`FinitePmf`].
pub const MASS_TOL: f64 = 1e-12;

/// Neumaier-compensated sum.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// A finite alphabet; symbols are the indices `0..size`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "usize", into = "usize")]
pub struct Alphabet(usize);

impl Alphabet {
    pub fn new(size: usize) -> Result<Self> {
        if size == 0 {
            return Err(Error::invalid("alphabet", "size must be at least 1"));
        }
        Ok(Alphabet(size))
    }

    pub fn binary() -> Self {
        Alphabet(2)
    }

    #[inline]
    pub fn size(self) -> usize {
        self.0
    }
}

impl TryFrom<usize> for Alphabet {
    type Error = Error;

    fn try_from(size: usize) -> Result<Self> {
        Alphabet::new(size)
    }
}

impl From<Alphabet> for usize {
    fn from(a: Alphabet) -> usize {
        a.0
    }
}

/// Probability vector over a finite alphabet.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct FinitePmf {
    weights: Vec<f64>,
}

impl FinitePmf {
    /// Validates `weights`: each in `[0, 1]`, total within [`MASS_TOL`] of one.
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        validate_weights(&weights)?;
        Ok(FinitePmf { weights })
    }

    /// Scales non-negative finite weights to unit mass.
    pub fn normalized(mut weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidPmf("empty weight vector".into()));
        }
        if let Some(w) = weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
            return Err(Error::InvalidPmf(format!(
                "weight {w} is not a finite non-negative number"
            )));
        }
        let total = compensated_sum(weights.iter().copied());
        if total <= 0.0 {
            return Err(Error::InvalidPmf("weights have zero total mass".into()));
        }
        weights.iter_mut().for_each(|w| *w /= total);
        Ok(FinitePmf { weights })
    }

    pub fn uniform(size: usize) -> Self {
        assert!(size > 0, "uniform pmf over an empty alphabet");
        FinitePmf {
            weights: vec![1.0 / size as f64; size],
        }
    }

    /// Point mass at `symbol`.
    pub fn point(size: usize, symbol: usize) -> Self {
        assert!(symbol < size, "symbol {symbol} outside alphabet of size {size}");
        let mut weights = vec![0.0; size];
        weights[symbol] = 1.0;
        FinitePmf { weights }
    }

    /// Binary pmf with `P(1) = p`.
    pub fn bernoulli(p: f64) -> Result<Self> {
        FinitePmf::new(vec![1.0 - p, p])
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    #[inline]
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    #[inline]
    pub fn prob(&self, symbol: usize) -> f64 {
        self.weights[symbol]
    }

    pub fn into_weights(self) -> Vec<f64> {
        self.weights
    }
}

impl TryFrom<Vec<f64>> for FinitePmf {
    type Error = Error;

    fn try_from(weights: Vec<f64>) -> Result<Self> {
        FinitePmf::new(weights)
    }
}

impl From<FinitePmf> for Vec<f64> {
    fn from(p: FinitePmf) -> Vec<f64> {
        p.weights
    }
}

pub(crate) fn validate_weights(weights: &[f64]) -> Result<()> {
    if weights.is_empty() {
        return Err(Error::InvalidPmf("empty weight vector".into()));
    }
    for (i, &w) in weights.iter().enumerate() {
        if !(0.0..=1.0).contains(&w) {
            return Err(Error::InvalidPmf(format!("weight[{i}] = {w} is outside [0, 1]")));
        }
    }
    let total = compensated_sum(weights.iter().copied());
    if (total - 1.0).abs() > MASS_TOL {
        return Err(Error::InvalidPmf(format!("weights sum to {total}, not 1")));
    }
    Ok(())
}
