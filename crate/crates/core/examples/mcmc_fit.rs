//! Posterior of the SQE length scale by random-walk Metropolis-Hastings on
//! synthetic data with a known length scale of 0.5.

use inhomo::inference::{run_chain, ChainConfig, ChainData, ModelKind};
use inhomo::synth::{sample, SynthSpec};

fn main() -> inhomo::Result<()> {
    let mut spec = SynthSpec::stationary_gp(0.5, 60, 11);
    spec.spacing = 0.1;
    let (ds, _) = sample(&spec)?;
    let data = ChainData::new(&ds, 0)?;

    let cfg = ChainConfig {
        model: ModelKind::Stationary,
        n_iter: 4000,
        n_burn: 1000,
        rng_seed: 11,
        ..ChainConfig::default()
    };
    let out = run_chain(&cfg, &data)?;
    let s = &out.summary;
    for p in &s.params {
        println!("{}: mean {:.4}, 95% HPD [{:.4}, {:.4}]", p.name, p.mean, p.hpd.lo, p.hpd.hi);
    }
    println!("acceptance {:.2}, adapted proposal sd {:?}", s.acceptance_rate, out.proposal_sd);
    for w in &s.warnings {
        println!("warning: {w}");
    }

    let mut csv = Vec::new();
    out.trace.write_csv(&mut csv)?;
    let text = String::from_utf8_lossy(&csv);
    println!("\ntrace head:");
    for line in text.lines().take(4) {
        println!("  {line}");
    }
    Ok(())
}
