use serde::Serialize;

use super::index;
use super::kernel::GeneralKernel;
use super::measure::check_source;
use super::pmf::compensated_sum;
use super::source::SourceModel;
use crate::error::Result;

/// Histories below this joint mass are treated as unreachable.
pub const NEGLIGIBLE_MASS: f64 = 1e-15;

/// Two source trajectories that share `(x^i, y^{i-1})` but give `Y_i`
/// different conditional laws.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CausalityWitness {
    pub stage: usize,
    pub y_prefix: Vec<usize>,
    pub x_first: Vec<usize>,
    pub x_second: Vec<usize>,
    pub deviation: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CausalityCheck {
    pub causal: bool,
    pub witness: Option<CausalityWitness>,
}

/// Tests `Y_i - (X^i, Y^{i-1}) - (X_{i+1}, ..., X_n)` for every `i < n`: the
/// law of `Y_i` given `(x^n, y^{i-1})` must not depend on the source suffix,
/// on every history of positive probability. The first violation larger
/// than `tol` is returned as a witness.
pub fn validate_causal(kernel: &GeneralKernel, source: &SourceModel, tol: f64) -> Result<CausalityCheck> {
    let shape = kernel.shape();
    check_source(source, &shape)?;
    let (nx, ny, m) = (shape.nx(), shape.ny(), shape.steps());

    // y-prefix marginals of every row: marg[x][len][y_pre]
    let marg: Vec<Vec<Vec<f64>>> = (0..shape.x_paths())
        .map(|x| {
            let mut levels = vec![kernel.row(x).to_vec()];
            for _ in 0..m {
                let shorter = levels
                    .last()
                    .unwrap()
                    .chunks(ny)
                    .map(|c| compensated_sum(c.iter().copied()))
                    .collect();
                levels.push(shorter);
            }
            levels.reverse();
            levels
        })
        .collect();

    let mu = source.joint();
    for i in 0..shape.horizon {
        let suffixes = index::count(nx, m - i - 1);
        for x_pre in 0..index::count(nx, i + 1) {
            for yp in 0..index::count(ny, i) {
                let mut reference: Option<(usize, Vec<f64>)> = None;
                for suf in 0..suffixes {
                    let x = x_pre * suffixes + suf;
                    let hist = marg[x][i][yp];
                    if mu[x] * hist <= NEGLIGIBLE_MASS {
                        continue;
                    }
                    let law: Vec<f64> = (0..ny).map(|y| marg[x][i + 1][yp * ny + y] / hist).collect();
                    match &reference {
                        None => reference = Some((x, law)),
                        Some((x0, ref_law)) => {
                            let dev = law.iter().zip(ref_law).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                            if dev > tol {
                                return Ok(CausalityCheck {
                                    causal: false,
                                    witness: Some(CausalityWitness {
                                        stage: i,
                                        y_prefix: index::digits(yp, ny, i),
                                        x_first: index::digits(*x0, nx, m),
                                        x_second: index::digits(x, nx, m),
                                        deviation: dev,
                                    }),
                                });
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(CausalityCheck {
        causal: true,
        witness: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prob::{CausalKernelChain, FinitePmf, Shape};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn uniform_binary(n: usize) -> SourceModel {
        SourceModel::iid(FinitePmf::uniform(2), n).unwrap()
    }

    #[test]
    fn expanded_chain_is_causal() {
        let shape = Shape::new(2, 3, 2).unwrap();
        let chain = CausalKernelChain::random(shape, &mut ChaCha8Rng::seed_from_u64(4));
        let src = SourceModel::iid(FinitePmf::uniform(2), 2).unwrap();
        let check = validate_causal(&chain.expand().unwrap(), &src, 1e-12).unwrap();
        assert!(check.causal);
    }

    #[test]
    fn lookahead_is_caught_at_stage_zero() {
        let shape = Shape::new(2, 2, 1).unwrap();
        let k = GeneralKernel::deterministic(shape, |x| vec![x[1], x[0]]).unwrap();
        let check = validate_causal(&k, &uniform_binary(1), 1e-9).unwrap();
        assert!(!check.causal);
        let w = check.witness.unwrap();
        assert_eq!(w.stage, 0);
        assert_eq!(w.x_first[0], w.x_second[0]);
        assert!((w.deviation - 1.0).abs() < 1e-15);
    }

    #[test]
    fn horizon_zero_is_vacuous() {
        let shape = Shape::new(2, 2, 0).unwrap();
        let k = GeneralKernel::random(shape, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert!(validate_causal(&k, &uniform_binary(0), 0.0).unwrap().causal);
    }

    #[test]
    fn unreachable_histories_are_ignored() {
        // the source never emits x_1 = 1, so lookahead on x_1 cannot be observed
        let src = SourceModel::iid(FinitePmf::point(2, 0), 1).unwrap();
        let shape = Shape::new(2, 2, 1).unwrap();
        let k = GeneralKernel::deterministic(shape, |x| vec![x[1], 0]).unwrap();
        assert!(validate_causal(&k, &src, 1e-9).unwrap().causal);
    }
}
