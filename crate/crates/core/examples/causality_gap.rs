//! Causal against classical rate at matched distortion on a Markov source.

use crdf::distortion::DistortionModel;
use crdf::prob::{Shape, SourceModel};
use crdf::solver::{classical_at_distortion, sweep, SolverOptions, SweepMode};

fn main() -> crdf::Result<()> {
    let src = SourceModel::symmetric_markov(2, 0.2, 2)?;
    let dist = DistortionModel::hamming(Shape::new(2, 2, 2)?);
    let grid = [-0.5, -1.0, -2.0, -3.0, -5.0, -8.0];
    let curve = sweep(&src, &dist, &grid, &SolverOptions::default(), SweepMode::Sequential)?;
    let tight = SolverOptions {
        tol: 1e-12,
        max_iters: 200_000,
        ..Default::default()
    };
    println!("D,R_causal,R_classical");
    for p in curve.converged() {
        let c = classical_at_distortion(&src, &dist, p.distortion, &tight)?;
        println!("{:.6},{:.6},{:.6}", p.distortion, p.rate, c.rate);
    }
    Ok(())
}
