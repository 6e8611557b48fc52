//! Directional derivative of mutual information against a central
//! difference, and the first-order optimality gap at a solver fixed point.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crdf::distortion::DistortionModel;
use crdf::prob::{CausalKernelChain, FinitePmf, Shape, SourceModel};
use crdf::solver::{finite_difference, gateaux_derivative, optimality_gap, solve_fixed_s, SolverOptions};

fn main() -> crdf::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let shape = Shape::new(2, 3, 1)?;
    let src = SourceModel::iid(FinitePmf::new(vec![0.4, 0.6])?, 1)?;
    let q0 = CausalKernelChain::random(shape, &mut rng);
    let q1 = CausalKernelChain::random(shape, &mut rng);
    let g = gateaux_derivative(&src, &q0, &q1)?;
    let fd = finite_difference(&src, &q0, &q1, 1e-5)?;
    println!(
        "derivative {g:.9}, central difference {fd:.9}, gap {:.2e}",
        (g - fd).abs()
    );

    let dist = DistortionModel::hamming(Shape::new(2, 2, 1)?);
    let p = solve_fixed_s(&src, &dist, -2.0, &SolverOptions::default())?;
    let worst = (0..20)
        .map(|_| {
            optimality_gap(
                &src,
                &dist,
                -2.0,
                &p.chain,
                &CausalKernelChain::random(dist.shape(), &mut rng),
            )
        })
        .collect::<crdf::Result<Vec<f64>>>()?
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    println!("smallest optimality gap over 20 directions: {worst:.3e} (non-negative at an optimum)");
    Ok(())
}
