//! p_D of a smooth stationary draw against a draw whose length scale jumps
//! halfway through.
//!
//! cargo run --release --example inhomogeneity

use inhomo::inhomogeneity::{inhomogeneity_of, CorrEstimatorConfig, Tolerance};
use inhomo::synth::{sample, SynthSpec};

fn main() -> inhomo::Result<()> {
    let est = CorrEstimatorConfig::default();
    for seed in 0..5 {
        let (smooth, _) = sample(&SynthSpec::stationary_gp(5.0, 500, seed))?;
        let (jumpy, _) = sample(&SynthSpec::two_segment_gp(5.0, 0.05, 500, seed))?;

        let (_, a) = inhomogeneity_of(&smooth, &est, Tolerance::Constant(0.05))?;
        let (ls, b) = inhomogeneity_of(&jumpy, &est, Tolerance::Constant(0.05))?;
        println!(
            "seed {seed}: stationary p_D = {:.4}   piecewise p_D = {:.4}  (incompatible {:?})",
            a.p, b.p, b.incompatible_indices
        );
        if seed == 0 {
            let tail: Vec<String> = ls.values[240..260].iter().map(|l| format!("{l:.3}")).collect();
            println!("  L around the jump: {}", tail.join(" "));
        }
    }

    // proportional bands scale with L itself
    let (ds, _) = sample(&SynthSpec::two_segment_gp(5.0, 0.05, 500, 0))?;
    let (_, r) = inhomogeneity_of(&ds, &est, Tolerance::Proportional(0.1))?;
    println!("beta = 0.1: m = {}, p_D = {:.4}", r.m, r.p);
    Ok(())
}
