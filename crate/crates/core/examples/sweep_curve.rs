//! Sweeps the multiplier and prints the curve as CSV.

use crdf::cli::curve_csv;
use crdf::distortion::DistortionModel;
use crdf::prob::{Shape, SourceModel};
use crdf::solver::{default_grid, sweep, SolverOptions, SweepMode};

fn main() -> crdf::Result<()> {
    let src = SourceModel::symmetric_markov(2, 0.2, 2)?;
    let dist = DistortionModel::hamming(Shape::new(2, 2, 2)?);
    let curve = sweep(
        &src,
        &dist,
        &default_grid(),
        &SolverOptions::default(),
        SweepMode::Sequential,
    )?;
    print!("{}", curve_csv(&curve));
    println!("# D_max = {:.6}", curve.d_max_reported);
    Ok(())
}
