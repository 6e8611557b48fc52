//! The two zero-rate distortion levels: best deterministic output sequence
//! and the product measure with a given output law.

use crdf::distortion::{d_max_min_sequence, d_max_product, DistortionModel};
use crdf::prob::{FinitePmf, OutputProcess, Shape, SourceModel};

fn main() -> crdf::Result<()> {
    let src = SourceModel::iid(FinitePmf::bernoulli(0.9)?, 1)?;
    let dist = DistortionModel::hamming(Shape::new(2, 2, 1)?);
    let best = d_max_min_sequence(&src, &dist)?;
    println!("best sequence {:?} gives D = {}", best.argmin, best.value);
    for p in [0.5, 0.9] {
        let law = OutputProcess::iid(&FinitePmf::bernoulli(p)?, 1)?;
        println!(
            "product with Bern({p}) outputs: D = {:.4}",
            d_max_product(&src, &law, &dist)?
        );
    }
    Ok(())
}
