//! Finite alphabets, probability vectors, kernels and the measures they induce.

mod causal;
pub mod index;
mod kernel;
mod measure;
mod pmf;
mod source;

pub use causal::{validate_causal, CausalityCheck, CausalityWitness, NEGLIGIBLE_MASS};
pub use index::Shape;
pub(crate) use kernel::random_weights;
pub use kernel::{CausalKernelChain, ChainStage, ConditionalKernel, GeneralKernel};
pub(crate) use measure::{check_source, output_from_prefixes, sample_row};
pub use measure::{
    make_joint, make_joint_general, output_marginal, prefix_joints, product_measure, JointMeasure, OutputProcess,
    Provenance,
};
pub use pmf::{compensated_sum, Alphabet, FinitePmf, MASS_TOL};
pub use source::{SourceModel, SourceSpec};
