//! Solver against brute-force search over causal kernels.

use crdf::distortion::DistortionModel;
use crdf::oracle::{brute_force_lagrangian, compare, OracleMethod};
use crdf::prob::{Shape, SourceModel};
use crdf::solver::{solve_fixed_s, KernelUpdate, SolverOptions};

fn main() -> crdf::Result<()> {
    let src = SourceModel::symmetric_markov(2, 0.2, 1)?;
    let dist = DistortionModel::hamming(Shape::new(2, 2, 1)?);
    for s in [-0.5, -2.0, -5.0] {
        let oracle = brute_force_lagrangian(&src, &dist, s, OracleMethod::Multistart, 60, 9)?;
        for update in [KernelUpdate::Tilted, KernelUpdate::TiltedCostToGo] {
            let p = solve_fixed_s(
                &src,
                &dist,
                s,
                &SolverOptions {
                    update,
                    ..Default::default()
                },
            )?;
            let c = compare(&p, &oracle, 1e-3)?;
            println!(
                "s = {s:5}: {update:?} {:.6} vs oracle {:.6} ({} evaluations), diff {:+.2e}",
                c.solver_value, c.oracle_value, oracle.evaluations, c.difference
            );
        }
    }
    Ok(())
}
