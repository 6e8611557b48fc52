//! Mixed-radix trajectory indexing.
//!
//! A trajectory `(z_0, ..., z_{len-1})` over an alphabet of size `b` is stored
//! at index `sum_t z_t * b^(len-1-t)`: row-major with time 0 as the most
//! significant digit. The index of the prefix `z^k` (first `k` symbols) is
//! therefore `idx / b^(len-k)`, and appending a symbol is `idx * b + z`.
//!
//! Joint tables over `X^len x Y^len` put the source index first:
//! `x_idx * |Y|^len + y_idx`.

use serde::{Deserialize, Serialize};

use super::pmf::Alphabet;
use crate::error::{Error, Result};

/// Upper bound on any table the crate materializes, in entries.
pub const MAX_TABLE: usize = 1 << 26;

/// `base^len`, or a capacity error.
pub fn checked_count(base: usize, len: usize, what: &str) -> Result<usize> {
    let needed = (base as u128).checked_pow(len as u32).unwrap_or(u128::MAX);
    if needed > MAX_TABLE as u128 {
        return Err(Error::Capacity {
            what: what.to_string(),
            needed,
            limit: MAX_TABLE as u128,
        });
    }
    Ok(needed as usize)
}

#[inline]
pub fn count(base: usize, len: usize) -> usize {
    base.pow(len as u32)
}

/// Index of the length-`keep` prefix of a length-`len` trajectory.
#[inline]
pub fn prefix(idx: usize, base: usize, len: usize, keep: usize) -> usize {
    idx / count(base, len - keep)
}

/// Symbol at time `pos` of a length-`len` trajectory.
#[inline]
pub fn digit(idx: usize, base: usize, len: usize, pos: usize) -> usize {
    (idx / count(base, len - 1 - pos)) % base
}

pub fn digits(idx: usize, base: usize, len: usize) -> Vec<usize> {
    (0..len).map(|t| digit(idx, base, len, t)).collect()
}

pub fn encode(symbols: &[usize], base: usize) -> usize {
    symbols.iter().fold(0, |acc, &z| acc * base + z)
}

/// Geometry shared by sources, kernels and measures: both alphabets and the
/// horizon `n` (time indices `0..=n`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Shape {
    pub source: Alphabet,
    pub reproduction: Alphabet,
    pub horizon: usize,
}

impl Shape {
    pub fn new(source: usize, reproduction: usize, horizon: usize) -> Result<Self> {
        let shape = Shape {
            source: Alphabet::new(source)?,
            reproduction: Alphabet::new(reproduction)?,
            horizon,
        };
        checked_count(shape.nx(), shape.steps(), "source trajectory table")?;
        checked_count(shape.ny(), shape.steps(), "reproduction trajectory table")?;
        Ok(shape)
    }

    /// Number of time steps, `n + 1`.
    #[inline]
    pub fn steps(&self) -> usize {
        self.horizon + 1
    }

    #[inline]
    pub fn nx(&self) -> usize {
        self.source.size()
    }

    #[inline]
    pub fn ny(&self) -> usize {
        self.reproduction.size()
    }

    /// `|X|^(n+1)`.
    #[inline]
    pub fn x_paths(&self) -> usize {
        count(self.nx(), self.steps())
    }

    /// `|Y|^(n+1)`.
    #[inline]
    pub fn y_paths(&self) -> usize {
        count(self.ny(), self.steps())
    }

    #[inline]
    pub fn joint_len(&self) -> usize {
        self.x_paths() * self.y_paths()
    }

    /// Rows of stage `i` of a causal chain: one per `(y^{i-1}, x^i)`.
    #[inline]
    pub fn stage_rows(&self, i: usize) -> usize {
        count(self.ny(), i) * count(self.nx(), i + 1)
    }

    /// Row of stage `i` for the history `(y^{i-1}, x^i)` given as prefix indices.
    #[inline]
    pub fn stage_row(&self, i: usize, y_prev: usize, x_pre: usize) -> usize {
        y_prev * count(self.nx(), i + 1) + x_pre
    }

    /// Capacity check for tables over `X^(n+1) x Y^(n+1)`.
    pub fn check_joint(&self) -> Result<()> {
        checked_count(self.nx() * self.ny(), self.steps(), "joint trajectory table").map(|_| ())
    }

    pub(crate) fn ensure_same(&self, other: &Shape, what: &str) -> Result<()> {
        if self != other {
            return Err(Error::Shape(format!("{what}: {self:?} vs {other:?}")));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips_digits() {
        for idx in 0..27 {
            let d = digits(idx, 3, 3);
            assert_eq!(encode(&d, 3), idx);
            assert_eq!(prefix(idx, 3, 3, 1), d[0]);
            assert_eq!(prefix(idx, 3, 3, 2), d[0] * 3 + d[1]);
        }
        assert_eq!(digits(6, 2, 3), vec![1, 1, 0]);
    }

    #[test]
    fn capacity_guard() {
        assert!(Shape::new(2, 2, 11).unwrap().check_joint().is_ok());
        assert!(Shape::new(2, 2, 15).unwrap().check_joint().is_err());
        assert!(matches!(Shape::new(3, 3, 40), Err(Error::Capacity { .. })));
    }
}
