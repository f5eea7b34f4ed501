//! Every generator once, written as CSV to a temporary directory.

use inhomo::dataset::write_csv;
use inhomo::synth::{sample, SynthSpec};

fn main() -> inhomo::Result<()> {
    let dir = std::env::temp_dir().join("inhomo-synth");
    std::fs::create_dir_all(&dir).expect("temp dir");

    let specs = [
        ("stationary", SynthSpec::stationary_gp(5.0, 500, 1)),
        ("piecewise", SynthSpec::two_segment_gp(5.0, 0.05, 500, 1)),
        ("unit_root", SynthSpec::unit_root(1.0, 2000, 1)),
        ("noisy_trend", SynthSpec::noisy_trend(20_000, 1)),
    ];
    for (name, spec) in specs {
        let (ds, noise) = sample(&spec)?;
        let path = dir.join(format!("{name}.csv"));
        write_csv(&ds, &path)?;
        let y = ds.output_column(0);
        let (lo, hi) = y.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(*v), b.max(*v)));
        print!("{name:<12} n = {:>6}  range [{lo:>8.3}, {hi:>8.3}]", ds.len());
        if let Some(a) = noise {
            print!("  max noise {:.3}", a.iter().copied().fold(0.0, f64::max));
        }
        println!("  -> {}", path.display());
    }
    Ok(())
}
