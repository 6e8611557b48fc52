//! Classical Blahut–Arimoto on whole trajectories, with no causality
//! constraint. Its curve lower-bounds the causal one.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Init, SolverOptions};
use crate::distortion::DistortionModel;
use crate::error::{Error, Result};
use crate::info::mutual_information;
use crate::prob::{check_source, compensated_sum, make_joint_general, random_weights, GeneralKernel, SourceModel};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassicalPoint {
    pub s: f64,
    pub distortion: f64,
    pub rate: f64,
    pub iterations: usize,
    pub converged: bool,
    pub kernel: GeneralKernel,
}

/// Tilt `2^{s sum_i rho_i}` over the trajectory alphabet, alternating with
/// the output marginal until the kernel moves less than `opts.tol`.
pub fn classical_ba(
    source: &SourceModel,
    dist: &DistortionModel,
    s: f64,
    opts: &SolverOptions,
) -> Result<ClassicalPoint> {
    opts.validate()?;
    if !(s <= 0.0 && s.is_finite()) {
        return Err(Error::invalid("s", format!("must be finite and <= 0, got {s}")));
    }
    let shape = dist.shape();
    check_source(source, &shape)?;
    shape.check_joint()?;
    let (xs, ys) = (shape.x_paths(), shape.y_paths());
    let mu = source.joint();
    let mut exponent = vec![0.0; xs * ys];
    for x in 0..xs {
        let row = &mut exponent[x * ys..(x + 1) * ys];
        for (y, e) in row.iter_mut().enumerate() {
            *e = s * dist.path_total(x, y);
        }
        let top = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        row.iter_mut().for_each(|e| *e -= top);
    }
    let mut r: Vec<f64> = match opts.init {
        Init::Uniform => vec![1.0 / ys as f64; ys],
        Init::Random { seed } => {
            let w = random_weights(ys, &mut ChaCha8Rng::seed_from_u64(seed));
            let t: f64 = w.iter().sum();
            w.into_iter().map(|v| v / t).collect()
        }
    };
    let update = |r: &[f64], q: &mut [f64]| {
        for x in 0..xs {
            let row = &mut q[x * ys..(x + 1) * ys];
            for (y, v) in row.iter_mut().enumerate() {
                *v = r[y] * exponent[x * ys + y].exp2();
            }
            let z = compensated_sum(row.iter().copied());
            if z > 0.0 {
                row.iter_mut().for_each(|v| *v /= z);
            } else {
                // r vanished on every near-optimal output: restart the row from them
                for (y, v) in row.iter_mut().enumerate() {
                    *v = if exponent[x * ys + y] == 0.0 { 1.0 } else { 0.0 };
                }
                let t: f64 = row.iter().sum();
                row.iter_mut().for_each(|v| *v /= t);
            }
        }
    };
    let mut q = vec![0.0; xs * ys];
    update(&r, &mut q);
    let mut next = vec![0.0; xs * ys];
    let mut iterations = 1;
    let mut converged = false;
    while iterations < opts.max_iters {
        for (y, slot) in r.iter_mut().enumerate() {
            *slot = compensated_sum((0..xs).map(|x| mu[x] * q[x * ys + y]));
        }
        update(&r, &mut next);
        let delta = q.iter().zip(&next).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        std::mem::swap(&mut q, &mut next);
        iterations += 1;
        if delta < opts.tol {
            converged = true;
            break;
        }
    }
    let rows = q.chunks(ys).map(<[f64]>::to_vec).collect();
    let kernel = GeneralKernel::from_rows(shape, rows)?;
    let joint = make_joint_general(source, &kernel)?;
    Ok(ClassicalPoint {
        s,
        distortion: crate::distortion::average_distortion(&joint, dist)?,
        rate: mutual_information(&joint) / shape.steps() as f64,
        iterations,
        converged,
        kernel,
    })
}

/// Bisection on `s` for the classical point with distortion at most
/// `target` and within `1e-10` of it where the curve allows.
pub fn classical_at_distortion(
    source: &SourceModel,
    dist: &DistortionModel,
    target: f64,
    opts: &SolverOptions,
) -> Result<ClassicalPoint> {
    let zero = classical_ba(source, dist, 0.0, opts)?;
    if zero.distortion <= target {
        return Ok(zero);
    }
    let mut lo = classical_ba(source, dist, -1.0, opts)?;
    let mut hi = 0.0;
    while lo.distortion > target {
        if lo.s < -1e4 {
            return Err(Error::Domain(format!("distortion {target} is not reached")));
        }
        hi = lo.s;
        lo = classical_ba(source, dist, lo.s * 2.0, opts)?;
    }
    for _ in 0..200 {
        if target - lo.distortion <= 1e-10 || (hi - lo.s).abs() < 1e-13 {
            break;
        }
        let mid = 0.5 * (lo.s + hi);
        let p = classical_ba(source, dist, mid, opts)?;
        if p.distortion <= target {
            lo = p;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prob::{FinitePmf, Shape};

    #[test]
    fn binary_quarter_distortion() {
        let src = SourceModel::iid(FinitePmf::uniform(2), 0).unwrap();
        let dist = DistortionModel::hamming(Shape::new(2, 2, 0).unwrap());
        // D = 1/(1 + 2^{-s}) = 1/4
        let p = classical_ba(&src, &dist, -(3f64.log2()), &SolverOptions::default()).unwrap();
        assert!((p.distortion - 0.25).abs() < 1e-9);
        assert!((p.rate - 0.188_721_875_540_867).abs() < 1e-8);
    }

    #[test]
    fn zero_multiplier() {
        let src = SourceModel::symmetric_markov(2, 0.2, 1).unwrap();
        let dist = DistortionModel::hamming(Shape::new(2, 2, 1).unwrap());
        let p = classical_ba(&src, &dist, 0.0, &SolverOptions::default()).unwrap();
        assert!(p.rate.abs() < 1e-12);
    }

    #[test]
    fn tensorizes_for_memoryless_sources() {
        let pmf = FinitePmf::new(vec![0.6, 0.3, 0.1]).unwrap();
        let one = classical_ba(
            &SourceModel::iid(pmf.clone(), 0).unwrap(),
            &DistortionModel::hamming(Shape::new(3, 3, 0).unwrap()),
            -1.7,
            &SolverOptions::default(),
        )
        .unwrap();
        let three = classical_ba(
            &SourceModel::iid(pmf, 2).unwrap(),
            &DistortionModel::hamming(Shape::new(3, 3, 2).unwrap()),
            -1.7,
            &SolverOptions::default(),
        )
        .unwrap();
        assert!((one.rate - three.rate).abs() < 1e-8);
        assert!((one.distortion - three.distortion).abs() < 1e-8);
    }
}
