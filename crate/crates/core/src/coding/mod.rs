//! Random-coding simulation: typical sets, codebooks and a block encoder
//! with per-letter decoders.

mod codebook;
mod pairs;
mod sim;
mod typical;

pub use codebook::{codebook_size, generate_codebook, sample_codebook, Codebook, DEFAULT_CODEBOOK_CAP};
pub use pairs::{sample_output_given, PairModel};
pub use sim::{simulate, SimParams, SimReport};
pub use typical::{
    is_distortion_typical, is_information_typical, typicality_probability, TypicalityMethod, TypicalityResult,
    TypicalitySpec, EXACT_PAIR_LIMIT,
};

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distortion::DistortionModel;
    use crate::prob::{CausalKernelChain, ConditionalKernel, FinitePmf, OutputProcess, Shape, SourceModel};

    fn bsc(p: f64) -> ConditionalKernel {
        ConditionalKernel::try_from(vec![vec![1.0 - p, p], vec![p, 1.0 - p]]).unwrap()
    }

    fn bsc_model(p: f64, n: usize) -> PairModel {
        let shape = Shape::new(2, 2, n).unwrap();
        PairModel::new(
            &SourceModel::iid(FinitePmf::uniform(2), n).unwrap(),
            &CausalKernelChain::memoryless(shape, bsc(p)).unwrap(),
            &DistortionModel::hamming(shape),
        )
        .unwrap()
    }

    #[test]
    fn codebook_sizes() {
        assert_eq!(codebook_size(0.0, 5, 16).unwrap(), 1);
        assert_eq!(codebook_size(0.5, 3, 16).unwrap(), 4);
        assert_eq!(codebook_size(0.34, 15, 1 << 20).unwrap(), 44);
        assert!(codebook_size(1.0, 30, DEFAULT_CODEBOOK_CAP).is_err());
        assert!(codebook_size(-0.1, 3, 16).is_err());
    }

    #[test]
    fn codebook_is_deterministic_and_follows_nu() {
        let nu = OutputProcess::iid(&FinitePmf::bernoulli(0.3).unwrap(), 3).unwrap();
        let a = generate_codebook(&nu, 3.5, 3, 11).unwrap();
        assert_eq!(a, generate_codebook(&nu, 3.5, 3, 11).unwrap());
        assert_eq!(a.len(), 1 << 14);
        let ones = (0..a.len()).filter(|&w| a.decode(w, 0, 2) == 1).count() as f64;
        let n = a.len() as f64;
        let se = (0.3f64 * 0.7 / n).sqrt();
        assert!((ones / n - 0.3).abs() < 4.0 * se);
    }

    #[test]
    fn identity_channel_is_always_typical() {
        let shape = Shape::new(2, 2, 3).unwrap();
        let model = PairModel::new(
            &SourceModel::iid(FinitePmf::uniform(2), 3).unwrap(),
            &CausalKernelChain::identity(shape).unwrap(),
            &DistortionModel::hamming(shape),
        )
        .unwrap();
        let r = typicality_probability(&TypicalitySpec::new(1e-6, model).unwrap()).unwrap();
        assert!(r.exact);
        assert!((r.p_information - 1.0).abs() < 1e-12 && (r.p_distortion - 1.0).abs() < 1e-12);
        assert!((r.directed_information - 4.0).abs() < 1e-12);
    }

    #[test]
    fn wide_epsilon_covers_everything() {
        let r = typicality_probability(&TypicalitySpec::new(2.0, bsc_model(0.25, 3)).unwrap()).unwrap();
        assert!((r.p_information - 1.0).abs() < 1e-12 && (r.p_distortion - 1.0).abs() < 1e-12);
    }

    #[test]
    fn density_deviation_is_not_bounded_by_alphabet_size() {
        // one flipped letter of BSC(0.1) has density log2(0.2), 2.85 bits below the mean
        let r = typicality_probability(&TypicalitySpec::new(2.0, bsc_model(0.1, 0)).unwrap()).unwrap();
        assert!((r.p_information - 0.9).abs() < 1e-12);
        assert!((r.p_distortion - 1.0).abs() < 1e-12);
    }

    #[test]
    fn exact_and_monte_carlo_agree() {
        let src = SourceModel::symmetric_markov(2, 0.2, 3).unwrap();
        let shape = Shape::new(2, 2, 3).unwrap();
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(5);
        let chain = CausalKernelChain::random(shape, &mut rng);
        let model = PairModel::new(&src, &chain, &DistortionModel::hamming(shape)).unwrap();
        let mut spec = TypicalitySpec::new(0.2, model).unwrap();
        let exact = typicality_probability(&spec).unwrap();
        spec.method = TypicalityMethod::MonteCarlo;
        spec.samples = 20_000;
        spec.seed = 3;
        let mc = typicality_probability(&spec).unwrap();
        assert!(!mc.exact);
        assert!((exact.p_information - mc.p_information).abs() < 4.0 * mc.se_information.max(1e-3));
        assert!((exact.p_distortion - mc.p_distortion).abs() < 4.0 * mc.se_distortion.max(1e-3));
    }

    #[test]
    fn density_mean_matches_directed_information() {
        let src = SourceModel::symmetric_markov(3, 0.3, 1).unwrap();
        let shape = Shape::new(3, 2, 1).unwrap();
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(6);
        let chain = CausalKernelChain::random(shape, &mut rng);
        let model = PairModel::new(&src, &chain, &DistortionModel::random_table(shape, &mut rng)).unwrap();
        let r = typicality_probability(&TypicalitySpec::new(0.1, model).unwrap()).unwrap();
        let di = crate::info::directed_information(&src, &chain).unwrap();
        assert!((r.directed_information - di).abs() < 1e-10);
    }

    #[test]
    fn zero_rate_mean_distortion() {
        let n = 3;
        let shape = Shape::new(2, 2, n).unwrap();
        let src = SourceModel::iid(FinitePmf::uniform(2), n).unwrap();
        let dist = DistortionModel::hamming(shape);
        let chain = CausalKernelChain::constant(shape, &FinitePmf::point(2, 0)).unwrap();
        let params = SimParams {
            rate: 0.0,
            trials: 4000,
            seed: 1,
            ..Default::default()
        };
        let r = simulate(&src, &dist, &chain, &params).unwrap();
        assert_eq!(r.codebook_size, 1);
        // per-trial distortion is Binomial(4, 1/2)/4
        let se = (0.0625f64 / 4000.0).sqrt();
        assert!((r.mean_distortion - 0.5).abs() < 3.0 * se);
    }

    #[test]
    fn exhaustive_codebook_is_lossless() {
        let shape = Shape::new(2, 2, 1).unwrap();
        let src = SourceModel::iid(FinitePmf::uniform(2), 1).unwrap();
        let dist = DistortionModel::hamming(shape);
        let chain = CausalKernelChain::constant(shape, &FinitePmf::uniform(2)).unwrap();
        let params = SimParams {
            rate: 4.0,
            trials: 200,
            ..Default::default()
        };
        assert_eq!(simulate(&src, &dist, &chain, &params).unwrap().mean_distortion, 0.0);
    }

    #[test]
    fn simulation_is_deterministic() {
        let shape = Shape::new(2, 2, 5).unwrap();
        let src = SourceModel::iid(FinitePmf::uniform(2), 5).unwrap();
        let chain = CausalKernelChain::memoryless(shape, bsc(0.25)).unwrap();
        let params = SimParams {
            rate: 0.4,
            trials: 300,
            seed: 9,
            ..Default::default()
        };
        let dist = DistortionModel::hamming(shape);
        let a = simulate(&src, &dist, &chain, &params).unwrap();
        let b = simulate(&src, &dist, &chain, &params).unwrap();
        assert_eq!(a, b);
    }
}
