//! Stationary against nonstationary fit on one random train/test split of
//! piecewise data, scored by RMSE and compatibility C.

use inhomo::dataset::split;
use inhomo::evaluation::metrics;
use inhomo::inference::{ChainConfig, ModelKind};
use inhomo::inhomogeneity::{inhomogeneity_of, CorrEstimatorConfig, Tolerance};
use inhomo::model::{fit_model, TestData};
use inhomo::rng::{stream, Stream};
use inhomo::synth::{sample, SynthSpec};
use rand::seq::SliceRandom;

fn main() -> inhomo::Result<()> {
    let seed = 7;
    let (ds, _) = sample(&SynthSpec::two_segment_gp(5.0, 0.05, 125, seed))?;
    let mut idx: Vec<usize> = (0..ds.len()).collect();
    idx.shuffle(&mut stream(seed, Stream::Split));
    let (train, test) = split(&ds, &idx[..100], &idx[100..])?;

    let (_, inh) = inhomogeneity_of(&train, &CorrEstimatorConfig::default(), Tolerance::Constant(0.05))?;
    println!("training p_D = {:.4}\n", inh.p);

    println!("{:<15} {:>10} {:>6} {:>12}", "model", "RMSE", "C", "ell");
    for model in [ModelKind::Stationary, ModelKind::Nonstationary] {
        let cfg = ChainConfig { model, n_iter: 5000, n_burn: 1000, lookback: 50, rng_seed: seed, ..ChainConfig::default() };
        let fitted = fit_model(&train, 0, &cfg)?;
        let m = metrics(&fitted.predict_set(&TestData::from_dataset(&test, 0))?)?;
        println!("{:<15} {:>10.5} {:>6.2} {:>12.5}", model.as_str(), m.rmse, m.compatibility, fitted.lengthscales[0]);
    }
    Ok(())
}
