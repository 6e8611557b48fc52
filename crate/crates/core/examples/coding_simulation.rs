//! Random-coding simulation with the per-letter kernel at D = 0.25, and
//! exact typicality probabilities at short horizons.

use crdf::coding::{simulate, typicality_probability, PairModel, SimParams, TypicalitySpec};
use crdf::distortion::DistortionModel;
use crdf::prob::{CausalKernelChain, FinitePmf, Shape, SourceModel};
use crdf::solver::{solve_for_distortion, SolverOptions};

fn main() -> crdf::Result<()> {
    let letter_src = SourceModel::iid(FinitePmf::uniform(2), 0)?;
    let letter_dist = DistortionModel::hamming(Shape::new(2, 2, 0)?);
    let p = solve_for_distortion(&letter_src, &letter_dist, 0.25, &SolverOptions::default())?;
    let kernel = p.chain.stages()[0].kernel().clone();

    for n in [3, 7, 11] {
        let shape = Shape::new(2, 2, n)?;
        let src = SourceModel::iid(FinitePmf::uniform(2), n)?;
        let dist = DistortionModel::hamming(shape);
        let chain = CausalKernelChain::memoryless(shape, kernel.clone())?;
        let params = SimParams {
            rate: 0.34,
            trials: 500,
            seed: 11,
            ..Default::default()
        };
        let r = simulate(&src, &dist, &chain, &params)?;
        let t = typicality_probability(&TypicalitySpec::new(0.05, PairModel::new(&src, &chain, &dist)?)?)?;
        println!(
            "n = {n:2}: {} codewords, mean distortion {:.4} (se {:.4}), exact P(T) = {:.4}, P(D) = {:.4}",
            r.codebook_size, r.mean_distortion, r.distortion_se, t.p_information, t.p_distortion
        );
    }
    Ok(())
}
