//! Augmented Dickey-Fuller on a random walk, on white noise, and on a long
//! noisy trend whose p_D is nevertheless almost zero.

use inhomo::inhomogeneity::{inhomogeneity_of, CorrEstimatorConfig};
use inhomo::stationarity::{adf_test, AdfConfig};
use inhomo::synth::{sample, sample_noisy_trend, SynthSpec};

fn main() -> inhomo::Result<()> {
    let cfg = AdfConfig::default();

    let (walk, _) = sample(&SynthSpec::unit_root(1.0, 2000, 1))?;
    let r = adf_test(&walk.output_column(0), &cfg)?;
    println!("random walk : stat {:>8.3}  p {:.3}  lags {}  reject at {:?}", r.statistic, r.p_value.unwrap_or(f64::NAN), r.lags_used, r.reject_at);

    // increments of a walk are white noise
    let y = walk.output_column(0);
    let noise: Vec<f64> = y.windows(2).map(|w| w[1] - w[0]).collect();
    let r = adf_test(&noise, &cfg)?;
    println!("white noise : stat {:>8.3}  p {:.3}  lags {}  reject at {:?}", r.statistic, r.p_value.unwrap_or(f64::NAN), r.lags_used, r.reject_at);

    let s = sample_noisy_trend(&SynthSpec::noisy_trend(52_224, 0))?;
    let r = adf_test(&s.data.output_column(0), &cfg)?;
    let (_, inh) = inhomogeneity_of(&s.data, &CorrEstimatorConfig::default(), s.tolerance())?;
    println!("noisy trend : stat {:>8.3}  p {:.3}  lags {}  reject at {:?}", r.statistic, r.p_value.unwrap_or(f64::NAN), r.lags_used, r.reject_at);
    println!("              p_D = {:.6} (m = {})", inh.p, inh.m);
    Ok(())
}
