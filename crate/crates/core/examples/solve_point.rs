//! Single Lagrangian solves: the binary closed form at n = 0, then a Markov
//! source with both kernel updates.

use crdf::distortion::DistortionModel;
use crdf::prob::{FinitePmf, Shape, SourceModel};
use crdf::solver::{solve_fixed_s, KernelUpdate, SolverOptions};

fn main() -> crdf::Result<()> {
    let src = SourceModel::iid(FinitePmf::uniform(2), 0)?;
    let dist = DistortionModel::hamming(Shape::new(2, 2, 0)?);
    let p = solve_fixed_s(&src, &dist, -(3f64.log2()), &SolverOptions::default())?;
    println!("uniform binary, n=0: D = {:.6}, R = {:.9} bits", p.distortion, p.rate);

    let src = SourceModel::symmetric_markov(2, 0.2, 2)?;
    let dist = DistortionModel::hamming(Shape::new(2, 2, 2)?);
    for update in [KernelUpdate::Tilted, KernelUpdate::TiltedCostToGo] {
        let opts = SolverOptions {
            update,
            ..Default::default()
        };
        let p = solve_fixed_s(&src, &dist, -2.0, &opts)?;
        println!(
            "Markov flip 0.2, n=2, {update:?}: D = {:.6}, R = {:.6}, R - sD = {:.6}, {} iterations",
            p.distortion,
            p.rate,
            p.lagrangian(),
            p.iterations
        );
    }
    Ok(())
}
