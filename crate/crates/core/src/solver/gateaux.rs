//! Directional derivative of the information functional along kernel mixtures.

use crate::distortion::{average_distortion, DistortionModel};
use crate::error::{Error, Result};
use crate::info::mutual_information;
use crate::prob::{compensated_sum, make_joint_general, CausalKernelChain, GeneralKernel, SourceModel};

/// `sum_{x,y} mu(x) (q1 - q0)(y | x) log2( q0(y | x) / nu0(y) )`, the
/// derivative of `I(q0 + t (q1 - q0))` at `t = 0`, in bits.
pub fn gateaux_derivative_general(source: &SourceModel, q0: &GeneralKernel, q1: &GeneralKernel) -> Result<f64> {
    q0.shape().ensure_same(&q1.shape(), "direction kernels")?;
    let joint = make_joint_general(source, q0)?;
    let nu = joint.y_marginal();
    let ys = q0.shape().y_paths();
    let mut terms = Vec::new();
    for (x, &mu) in source.joint().iter().enumerate() {
        if mu == 0.0 {
            continue;
        }
        for y in 0..ys {
            let (a, b) = (q0.prob(x, y), q1.prob(x, y));
            if a == b {
                continue;
            }
            if a == 0.0 {
                return Err(Error::Domain(format!(
                    "q0 vanishes at reachable pair ({x}, {y}) where the direction is nonzero"
                )));
            }
            terms.push(mu * (b - a) * (a / nu[y]).log2());
        }
    }
    Ok(compensated_sum(terms))
}

pub fn gateaux_derivative(source: &SourceModel, q0: &CausalKernelChain, q1: &CausalKernelChain) -> Result<f64> {
    gateaux_derivative_general(source, &q0.expand()?, &q1.expand()?)
}

/// Central difference `(I(q0 + eps d) - I(q0 - eps d)) / (2 eps)`, `d = q1 - q0`.
pub fn finite_difference(
    source: &SourceModel,
    q0: &CausalKernelChain,
    q1: &CausalKernelChain,
    eps: f64,
) -> Result<f64> {
    if !(eps > 0.0) {
        return Err(Error::invalid("eps", "must be positive"));
    }
    let (a, b) = (q0.expand()?, q1.expand()?);
    let plus = mutual_information(&make_joint_general(source, &a.mix(&b, eps)?)?);
    let minus = mutual_information(&make_joint_general(source, &a.mix(&b, -eps)?)?);
    Ok((plus - minus) / (2.0 * eps))
}

/// `dI(q*; q1 - q*) - s (l(q1) - l(q*))` with unnormalized `l`. Non-negative
/// at a minimizer of the Lagrangian over causal kernels.
pub fn optimality_gap(
    source: &SourceModel,
    dist: &DistortionModel,
    s: f64,
    q_star: &CausalKernelChain,
    q1: &CausalKernelChain,
) -> Result<f64> {
    let (a, b) = (q_star.expand()?, q1.expand()?);
    let steps = dist.shape().steps() as f64;
    let l0 = average_distortion(&make_joint_general(source, &a)?, dist)? * steps;
    let l1 = average_distortion(&make_joint_general(source, &b)?, dist)? * steps;
    Ok(gateaux_derivative_general(source, &a, &b)? - s * (l1 - l0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prob::Shape;
    use crate::solver::{solve_fixed_s, KernelUpdate, SolverOptions};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_direction() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let shape = Shape::new(2, 2, 1).unwrap();
        let q = CausalKernelChain::random(shape, &mut rng);
        let src = SourceModel::symmetric_markov(2, 0.2, 1).unwrap();
        assert_eq!(gateaux_derivative(&src, &q, &q).unwrap(), 0.0);
    }

    #[test]
    fn matches_central_difference() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let shape = Shape::new(2, 2, 1).unwrap();
        let src = SourceModel::symmetric_markov(2, 0.3, 1).unwrap();
        for _ in 0..10 {
            let q0 = CausalKernelChain::random(shape, &mut rng);
            let q1 = CausalKernelChain::random(shape, &mut rng);
            let g = gateaux_derivative(&src, &q0, &q1).unwrap();
            let fd = finite_difference(&src, &q0, &q1, 1e-5).unwrap();
            assert!((g - fd).abs() < 1e-6, "{g} vs {fd}");
        }
    }

    #[test]
    fn zero_atom_is_a_domain_error() {
        let shape = Shape::new(2, 2, 0).unwrap();
        let src = SourceModel::symmetric_markov(2, 0.2, 0).unwrap();
        let id = CausalKernelChain::identity(shape).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let q1 = CausalKernelChain::random(shape, &mut rng);
        assert!(gateaux_derivative(&src, &id, &q1).is_err());
    }

    #[test]
    fn first_order_optimality() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let shape = Shape::new(2, 2, 1).unwrap();
        let dist = DistortionModel::hamming(shape);
        let cases = [
            (
                SourceModel::iid(crate::prob::FinitePmf::bernoulli(0.3).unwrap(), 1).unwrap(),
                KernelUpdate::Tilted,
            ),
            (
                SourceModel::symmetric_markov(2, 0.2, 1).unwrap(),
                KernelUpdate::TiltedCostToGo,
            ),
        ];
        for (src, update) in cases {
            let opts = SolverOptions {
                update,
                tol: 1e-12,
                ..Default::default()
            };
            let p = solve_fixed_s(&src, &dist, -2.0, &opts).unwrap();
            for _ in 0..20 {
                let q1 = CausalKernelChain::random(shape, &mut rng);
                assert!(optimality_gap(&src, &dist, -2.0, &p.chain, &q1).unwrap() >= -1e-8);
            }
        }
    }
}
