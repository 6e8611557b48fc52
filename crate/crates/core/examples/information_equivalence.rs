//! Mutual and directed information coincide for causal kernels and separate
//! once the first output looks at the last input.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crdf::info::check_equivalences;
use crdf::prob::{CausalKernelChain, GeneralKernel, Shape, SourceModel};

fn main() -> crdf::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let shape = Shape::new(2, 2, 2)?;
    let src = SourceModel::symmetric_markov(2, 0.3, 2)?;

    let causal = CausalKernelChain::random(shape, &mut rng).expand()?;
    let r = check_equivalences(&src, &causal, 1e-10)?;
    println!(
        "causal:     I = {:.6}, I_dir = {:.6}, all conditions hold: {}",
        r.mutual_information,
        r.directed_information,
        r.all_hold()
    );

    let peek = GeneralKernel::deterministic(shape, |xs| vec![xs[2], xs[1], xs[2]])?;
    let anticausal = causal.mix(&peek, 0.7)?;
    let r = check_equivalences(&src, &anticausal, 1e-10)?;
    println!(
        "anticausal: I = {:.6}, I_dir = {:.6}, no condition holds: {}",
        r.mutual_information,
        r.directed_information,
        r.none_hold()
    );
    Ok(())
}
