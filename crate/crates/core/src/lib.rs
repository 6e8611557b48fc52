//! Causal (nonanticipative) rate distortion on finite alphabets.
//!
//! A source `mu` over `X^{0..n}` is reproduced by a causal kernel
//! `q(y^n | x^n) = prod_i q_i(y_i | y^{i-1}, x^i)`. The causal rate
//! distortion function is the least directed information
//! `I(X^n -> Y^n)/(n+1)` over such kernels meeting an average distortion
//! constraint. This crate computes it through its Lagrangian, checks the
//! structural facts around it, and simulates random codes that achieve it.
//!
//! Trajectories are indexed mixed-radix with time 0 most significant, so
//! `x^n = (x_0, ..., x_n)` maps to `sum_i x_i |X|^(n-i)`. Rates are in bits.
//!
//! ```
//! use crdf::prob::{FinitePmf, Shape, SourceModel};
//! use crdf::distortion::DistortionModel;
//! use crdf::solver::{solve_fixed_s, SolverOptions};
//!
//! let source = SourceModel::iid(FinitePmf::uniform(2), 0).unwrap();
//! let dist = DistortionModel::hamming(Shape::new(2, 2, 0).unwrap());
//! let p = solve_fixed_s(&source, &dist, -(3f64.log2()), &SolverOptions::default()).unwrap();
//! assert!((p.distortion - 0.25).abs() < 1e-9);
//! assert!((p.rate - 0.188_721_875_540_867).abs() < 1e-8);
//! ```

pub mod cli;
pub mod coding;
pub mod distortion;
pub mod error;
pub mod info;
pub mod oracle;
pub mod prob;
pub mod solver;

pub use distortion::{DistortionModel, DistortionSpec};
pub use error::{Error, Result};
pub use prob::{CausalKernelChain, FinitePmf, GeneralKernel, OutputProcess, Shape, SourceModel};
pub use solver::{RDCurve, RateDistortionPoint, SolverOptions};
