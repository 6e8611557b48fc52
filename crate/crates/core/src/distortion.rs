//! Per-letter and history-dependent distortion measures, expected
//! distortion, and the two zero-rate distortion levels.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prob::{compensated_sum, index, product_measure, JointMeasure, OutputProcess, Shape, SourceModel};

/// Serializable description of a distortion measure.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DistortionSpec {
    Hamming,
    /// `rho(x, y)` applied at every stage; rows indexed by `x`.
    SingleLetter {
        matrix: Vec<Vec<f64>>,
    },
    /// `rho_i(x^i, y^i)` per stage, flat over `x_pre * |Y|^(i+1) + y_pre`.
    Table {
        stages: Vec<Vec<f64>>,
    },
}

#[derive(Clone, Debug, PartialEq)]
enum Kind {
    SingleLetter(Vec<f64>),
    Table(Vec<Vec<f64>>),
}

/// `d_{0,n}(x^n, y^n) = (1/(n+1)) sum_i rho_i(x^i, y^i)` with bounded, non-negative `rho_i`.
#[derive(Clone, Debug, PartialEq)]
pub struct DistortionModel {
    shape: Shape,
    kind: Kind,
}

impl DistortionModel {
    pub fn hamming(shape: Shape) -> Self {
        let (nx, ny) = (shape.nx(), shape.ny());
        let matrix = (0..nx * ny).map(|k| if k / ny == k % ny { 0.0 } else { 1.0 }).collect();
        DistortionModel {
            shape,
            kind: Kind::SingleLetter(matrix),
        }
    }

    pub fn single_letter(shape: Shape, matrix: Vec<Vec<f64>>) -> Result<Self> {
        if matrix.len() != shape.nx() || matrix.iter().any(|r| r.len() != shape.ny()) {
            return Err(Error::Shape(format!(
                "single-letter distortion must be {}x{}",
                shape.nx(),
                shape.ny()
            )));
        }
        let flat = matrix.concat();
        check_values(&flat)?;
        Ok(DistortionModel {
            shape,
            kind: Kind::SingleLetter(flat),
        })
    }

    pub fn table(shape: Shape, stages: Vec<Vec<f64>>) -> Result<Self> {
        if stages.len() != shape.steps() {
            return Err(Error::Shape(format!(
                "distortion table has {} stages, expected {}",
                stages.len(),
                shape.steps()
            )));
        }
        for (i, st) in stages.iter().enumerate() {
            let expected = index::count(shape.nx(), i + 1) * index::count(shape.ny(), i + 1);
            if st.len() != expected {
                return Err(Error::Shape(format!(
                    "stage {i} has {} values, expected {expected}",
                    st.len()
                )));
            }
            check_values(st)?;
        }
        Ok(DistortionModel {
            shape,
            kind: Kind::Table(stages),
        })
    }

    /// History-dependent table with entries uniform on `[0, 1)`.
    pub fn random_table<R: Rng + ?Sized>(shape: Shape, rng: &mut R) -> Self {
        let stages = (0..shape.steps())
            .map(|i| {
                let len = index::count(shape.nx(), i + 1) * index::count(shape.ny(), i + 1);
                (0..len).map(|_| rng.gen::<f64>()).collect()
            })
            .collect();
        DistortionModel {
            shape,
            kind: Kind::Table(stages),
        }
    }

    pub fn from_spec(spec: &DistortionSpec, shape: Shape) -> Result<Self> {
        match spec {
            DistortionSpec::Hamming => Ok(Self::hamming(shape)),
            DistortionSpec::SingleLetter { matrix } => Self::single_letter(shape, matrix.clone()),
            DistortionSpec::Table { stages } => Self::table(shape, stages.clone()),
        }
    }

    pub fn spec(&self) -> DistortionSpec {
        match &self.kind {
            Kind::SingleLetter(flat) => DistortionSpec::SingleLetter {
                matrix: flat.chunks(self.shape.ny()).map(<[f64]>::to_vec).collect(),
            },
            Kind::Table(stages) => DistortionSpec::Table { stages: stages.clone() },
        }
    }

    #[inline]
    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn is_single_letter(&self) -> bool {
        matches!(self.kind, Kind::SingleLetter(_))
    }

    /// Same measure over another horizon; only single-letter measures extend.
    pub fn with_horizon(&self, horizon: usize) -> Result<Self> {
        match &self.kind {
            Kind::SingleLetter(flat) => Ok(DistortionModel {
                shape: Shape::new(self.shape.nx(), self.shape.ny(), horizon)?,
                kind: Kind::SingleLetter(flat.clone()),
            }),
            Kind::Table(_) if horizon == self.shape.horizon => Ok(self.clone()),
            Kind::Table(_) => Err(Error::invalid("horizon", "a distortion table is tied to its horizon")),
        }
    }

    /// `rho_i(x^i, y^i)` for prefix indices of length `i + 1` each.
    #[inline]
    pub fn rho(&self, i: usize, x_pre: usize, y_pre: usize) -> f64 {
        match &self.kind {
            Kind::SingleLetter(flat) => {
                let (nx, ny) = (self.shape.nx(), self.shape.ny());
                flat[(x_pre % nx) * ny + y_pre % ny]
            }
            Kind::Table(stages) => stages[i][x_pre * index::count(self.shape.ny(), i + 1) + y_pre],
        }
    }

    /// Per-letter matrix, if the measure is single-letter.
    pub fn letter_matrix(&self) -> Option<&[f64]> {
        match &self.kind {
            Kind::SingleLetter(flat) => Some(flat),
            Kind::Table(_) => None,
        }
    }

    /// `sum_i rho_i(x^i, y^i)` for full trajectory indices (unnormalized).
    pub fn path_total(&self, x: usize, y: usize) -> f64 {
        let (nx, ny, m) = (self.shape.nx(), self.shape.ny(), self.shape.steps());
        (0..m)
            .map(|i| self.rho(i, index::prefix(x, nx, m, i + 1), index::prefix(y, ny, m, i + 1)))
            .sum()
    }

    /// `d_{0,n}(x^n, y^n)`.
    pub fn path_distortion(&self, x: usize, y: usize) -> f64 {
        self.path_total(x, y) / self.shape.steps() as f64
    }
}

fn check_values(values: &[f64]) -> Result<()> {
    match values.iter().find(|v| !v.is_finite() || **v < 0.0) {
        Some(v) => Err(Error::invalid(
            "distortion",
            format!("value {v} is not finite and non-negative"),
        )),
        None => Ok(()),
    }
}

fn check_shapes(joint: Shape, dist: Shape) -> Result<()> {
    joint.ensure_same(&dist, "distortion model and joint measure")
}

/// `(1/(n+1)) E[ sum_i rho_i(X^i, Y^i) ]` under `joint`.
pub fn average_distortion(joint: &JointMeasure, dist: &DistortionModel) -> Result<f64> {
    check_shapes(joint.shape(), dist.shape())?;
    let ys = joint.shape().y_paths();
    let terms = joint
        .pmf()
        .iter()
        .enumerate()
        .filter(|(_, p)| **p > 0.0)
        .map(|(k, &p)| p * dist.path_total(k / ys, k % ys));
    Ok(compensated_sum(terms) / joint.shape().steps() as f64)
}

/// Same quantity from the prefix tables of a causal chain.
pub(crate) fn average_from_prefixes(tables: &[Vec<f64>], dist: &DistortionModel) -> f64 {
    let shape = dist.shape();
    let mut terms = Vec::new();
    for (i, table) in tables.iter().enumerate() {
        let ycur = index::count(shape.ny(), i + 1);
        for (k, &p) in table.iter().enumerate() {
            if p > 0.0 {
                terms.push(p * dist.rho(i, k / ycur, k % ycur));
            }
        }
    }
    compensated_sum(terms) / shape.steps() as f64
}

/// Zero-rate distortion attained by the best fixed output sequence.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SequenceDmax {
    pub value: f64,
    pub argmin: Vec<usize>,
}

/// Exhaustive minimum over deterministic output sequences `y^n` of
/// `(1/(n+1)) sum_i E[rho_i(X^i, y^i)]`. Ties within 1e-12 go to the
/// lexicographically smallest sequence.
pub fn d_max_min_sequence(source: &SourceModel, dist: &DistortionModel) -> Result<SequenceDmax> {
    let shape = dist.shape();
    if source.alphabet() != shape.source || source.horizon() != shape.horizon {
        return Err(Error::Shape("source and distortion model disagree".into()));
    }
    let (ny, m) = (shape.ny(), shape.steps());
    let values: Vec<f64> = (0..shape.y_paths())
        .into_par_iter()
        .map(|y| {
            let terms = (0..m).flat_map(|i| {
                let y_pre = index::prefix(y, ny, m, i + 1);
                source
                    .prefix_marginal(i)
                    .iter()
                    .enumerate()
                    .map(move |(x_pre, &mu)| mu * dist.rho(i, x_pre, y_pre))
            });
            compensated_sum(terms) / m as f64
        })
        .collect();
    let mut best = 0;
    for (y, &v) in values.iter().enumerate() {
        if v < values[best] - 1e-12 {
            best = y;
        }
    }
    Ok(SequenceDmax {
        value: values[best],
        argmin: index::digits(best, ny, m),
    })
}

/// Average distortion under the product `mu x nu`.
pub fn d_max_product(source: &SourceModel, output: &OutputProcess, dist: &DistortionModel) -> Result<f64> {
    average_distortion(&product_measure(source, output)?, dist)
}
