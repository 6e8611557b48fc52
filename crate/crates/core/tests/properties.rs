//! Randomized invariants, checked against brute-force reference code that
//! works directly on the joint pmf.

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crdf::cli::sig12;
use crdf::coding::codebook_size;
use crdf::distortion::{average_distortion, d_max_min_sequence, d_max_product, DistortionModel};
use crdf::info::{directed_information, directed_information_general, mutual_information};
use crdf::prob::{
    make_joint, make_joint_general, CausalKernelChain, ConditionalKernel, FinitePmf, GeneralKernel, OutputProcess,
    Shape, SourceModel,
};
use crdf::solver::{evaluate_chain, solve_fixed_s, KernelUpdate, SolverOptions};

fn pmf(len: usize, rng: &mut ChaCha8Rng) -> FinitePmf {
    FinitePmf::normalized((0..len).map(|_| 0.02 + rng.gen::<f64>()).collect()).unwrap()
}

fn source(nx: usize, n: usize, markov: bool, rng: &mut ChaCha8Rng) -> SourceModel {
    if markov {
        let rows = (0..nx).map(|_| pmf(nx, rng)).collect();
        SourceModel::markov(pmf(nx, rng), ConditionalKernel::from_rows(rows).unwrap(), n).unwrap()
    } else {
        SourceModel::iid(pmf(nx, rng), n).unwrap()
    }
}

fn log2_ratio(num: f64, den: f64) -> f64 {
    (num / den).log2()
}

/// Trajectory `t` of length `n + 1` truncated to its first `len` symbols.
fn prefix(t: usize, radix: usize, n: usize, len: usize) -> usize {
    t / radix.pow((n + 1 - len) as u32)
}

fn brute_mutual(p: &[f64], nx: usize, ny: usize, n: usize) -> f64 {
    let ys = ny.pow(n as u32 + 1);
    let xs = nx.pow(n as u32 + 1);
    let mut px = vec![0.0; xs];
    let mut py = vec![0.0; ys];
    for x in 0..xs {
        for y in 0..ys {
            px[x] += p[x * ys + y];
            py[y] += p[x * ys + y];
        }
    }
    let mut total = 0.0;
    for x in 0..xs {
        for y in 0..ys {
            let v = p[x * ys + y];
            if v > 0.0 {
                total += v * log2_ratio(v, px[x] * py[y]);
            }
        }
    }
    total
}

/// `sum_i I(X^i; Y_i | Y^{i-1})` from marginals of the full joint.
fn brute_directed(p: &[f64], nx: usize, ny: usize, n: usize) -> f64 {
    let ys = ny.pow(n as u32 + 1);
    let xs = nx.pow(n as u32 + 1);
    let mut total = 0.0;
    for i in 0..=n {
        let (cx, cy) = (nx.pow(i as u32 + 1), ny.pow(i as u32 + 1));
        let mut p_xy = vec![0.0; cx * cy];
        let mut p_x_yprev = vec![0.0; cx * (cy / ny)];
        let mut p_y = vec![0.0; cy];
        let mut p_yprev = vec![0.0; cy / ny];
        for x in 0..xs {
            for y in 0..ys {
                let v = p[x * ys + y];
                let (a, b) = (prefix(x, nx, n, i + 1), prefix(y, ny, n, i + 1));
                p_xy[a * cy + b] += v;
                p_x_yprev[a * (cy / ny) + b / ny] += v;
                p_y[b] += v;
                p_yprev[b / ny] += v;
            }
        }
        for a in 0..cx {
            for b in 0..cy {
                let v = p_xy[a * cy + b];
                if v > 0.0 {
                    total += v * log2_ratio(v * p_yprev[b / ny], p_x_yprev[a * (cy / ny) + b / ny] * p_y[b]);
                }
            }
        }
    }
    total
}

fn brute_hamming(p: &[f64], nx: usize, ny: usize, n: usize) -> f64 {
    let ys = ny.pow(n as u32 + 1);
    let mut total = 0.0;
    for (k, &v) in p.iter().enumerate() {
        let (mut x, mut y) = (k / ys, k % ys);
        let mut errors = 0;
        for _ in 0..=n {
            if x % nx != y % ny {
                errors += 1;
            }
            x /= nx;
            y /= ny;
        }
        total += v * errors as f64;
    }
    total / (n + 1) as f64
}

fn dims() -> impl Strategy<Value = (u64, usize, usize, usize, bool)> {
    (any::<u64>(), 2usize..=3, 2usize..=3, 0usize..=2, any::<bool>())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn joint_is_a_pmf_with_the_source_marginal((seed, nx, ny, n, markov) in dims()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let src = source(nx, n, markov, &mut rng);
        let chain = CausalKernelChain::random(Shape::new(nx, ny, n).unwrap(), &mut rng);
        let joint = make_joint(&src, &chain).unwrap();
        let total: f64 = joint.pmf().iter().sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
        prop_assert!(joint.pmf().iter().all(|&v| v >= 0.0));
        for (a, b) in joint.x_marginal().iter().zip(src.joint()) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn causal_chains_have_equal_mutual_and_directed_information((seed, nx, ny, n, markov) in dims()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let src = source(nx, n, markov, &mut rng);
        let chain = CausalKernelChain::random(Shape::new(nx, ny, n).unwrap(), &mut rng);
        let joint = make_joint(&src, &chain).unwrap();
        let mi = mutual_information(&joint);
        let di = directed_information(&src, &chain).unwrap();
        prop_assert!((mi - brute_mutual(joint.pmf(), nx, ny, n)).abs() < 1e-10);
        prop_assert!((di - brute_directed(joint.pmf(), nx, ny, n)).abs() < 1e-10);
        prop_assert!((mi - di).abs() < 1e-10);
        prop_assert!(mi >= -1e-12);
    }

    #[test]
    fn directed_never_exceeds_mutual_information((seed, nx, ny, n, markov) in dims()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let src = source(nx, n, markov, &mut rng);
        let kernel = GeneralKernel::random(Shape::new(nx, ny, n).unwrap(), &mut rng).unwrap();
        let joint = make_joint_general(&src, &kernel).unwrap();
        let di = directed_information_general(&src, &kernel).unwrap();
        prop_assert!((di - brute_directed(joint.pmf(), nx, ny, n)).abs() < 1e-10);
        prop_assert!(di <= mutual_information(&joint) + 1e-12);
        prop_assert!(di >= -1e-12);
    }

    #[test]
    fn hamming_average_matches_direct_count((seed, nx, ny, n, markov) in dims()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let src = source(nx, n, markov, &mut rng);
        let shape = Shape::new(nx, ny, n).unwrap();
        let joint = make_joint(&src, &CausalKernelChain::random(shape, &mut rng)).unwrap();
        let d = average_distortion(&joint, &DistortionModel::hamming(shape)).unwrap();
        prop_assert!((d - brute_hamming(joint.pmf(), nx, ny, n)).abs() < 1e-12);
        prop_assert!((0.0..=1.0).contains(&d));
    }

    #[test]
    fn best_sequence_beats_any_product_law((seed, nx, ny, n, markov) in dims()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let src = source(nx, n, markov, &mut rng);
        let shape = Shape::new(nx, ny, n).unwrap();
        let dist = DistortionModel::random_table(shape, &mut rng);
        let law = OutputProcess::iid(&pmf(ny, &mut rng), n).unwrap();
        let best = d_max_min_sequence(&src, &dist).unwrap();
        prop_assert!(best.value <= d_max_product(&src, &law, &dist).unwrap() + 1e-12);
        let mut y = 0;
        for &sym in &best.argmin {
            y = y * ny + sym;
        }
        let point = OutputProcess::from_joint(
            shape.reproduction,
            n,
            FinitePmf::point(ny.pow(n as u32 + 1), y),
        )
        .unwrap();
        prop_assert!((d_max_product(&src, &point, &dist).unwrap() - best.value).abs() < 1e-12);
    }

    #[test]
    fn memoryless_solution_beats_random_chains(
        (seed, nx, ny, n, _) in dims(),
        s in -8.0f64..-0.05,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let src = source(nx, n, false, &mut rng);
        let dist = DistortionModel::hamming(Shape::new(nx, ny, n).unwrap());
        let p = solve_fixed_s(&src, &dist, s, &SolverOptions::default()).unwrap();
        prop_assert!(p.rate >= -1e-12);
        prop_assert!(p.residual <= 1e-8 || !p.converged);
        if p.converged {
            prop_assert!((p.rate - p.rate_formula).abs() < 1e-7);
        }
        for _ in 0..4 {
            let other = evaluate_chain(&src, &dist, &CausalKernelChain::random(dist.shape(), &mut rng)).unwrap();
            prop_assert!(p.lagrangian() <= other.rate - s * other.distortion + 1e-7);
        }
    }

    #[test]
    fn cost_to_go_update_is_never_worse((seed, nx, ny, n, markov) in dims(), s in -6.0f64..-0.1) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let src = source(nx, n, markov, &mut rng);
        let dist = DistortionModel::random_table(Shape::new(nx, ny, n).unwrap(), &mut rng);
        let literal = solve_fixed_s(&src, &dist, s, &SolverOptions::default()).unwrap();
        let opts = SolverOptions { update: KernelUpdate::TiltedCostToGo, ..Default::default() };
        let backward = solve_fixed_s(&src, &dist, s, &opts).unwrap();
        prop_assume!(literal.converged && backward.converged);
        prop_assert!(backward.lagrangian() <= literal.lagrangian() + 1e-7);
    }

    #[test]
    fn twelve_digit_format_round_trips(x in prop::num::f64::NORMAL) {
        let back: f64 = sig12(x).parse().unwrap();
        prop_assert!(((back - x) / x).abs() <= 5e-12);
    }

    #[test]
    fn codebook_grows_with_rate(a in 0.0f64..1.5, b in 0.0f64..1.5, n in 0usize..8) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let small = codebook_size(lo, n, 1 << 20).unwrap();
        let large = codebook_size(hi, n, 1 << 20).unwrap();
        prop_assert!(1 <= small && small <= large);
    }
}
