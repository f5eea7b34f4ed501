//! Seeded synthetic data: stationary and piecewise-stationary GP draws on
//! an even grid, Gaussian random walks, and a noisy trend with known
//! per-index noise bounds.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::gp::{points, JitterLadder, PairwiseSqDiffs, SqeKernel};
use crate::inhomogeneity::Tolerance;
use crate::rng::{substream, Stream};

/// Largest size sampled through a dense factorisation.
pub const MAX_DENSE_N: usize = 5000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SynthKind {
    StationaryGp {
        lengthscale: f64,
    },
    /// Independent stationary segments; `starts` holds the 1-based first
    /// index of every segment after the first.
    PiecewiseGp {
        lengthscales: Vec<f64>,
        starts: Vec<usize>,
    },
    UnitRoot {
        sigma: f64,
    },
    NoisyTrend(NoisyTrend),
}

/// `y_t = drift·t + A(t) sin(2πt / period) + u_t` with
/// `A(t) = amplitude (1 + t/n)` and `u_t ~ U[-a_t, a_t]`, where the bound
/// `a_t` swings between `noise_min` and `noise_max` over `noise_period`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoisyTrend {
    pub drift: f64,
    pub amplitude: f64,
    pub period: f64,
    pub noise_min: f64,
    pub noise_max: f64,
    pub noise_period: f64,
}

impl Default for NoisyTrend {
    fn default() -> Self {
        NoisyTrend {
            drift: 2e-3,
            amplitude: 5.0,
            period: 8000.0,
            noise_min: 0.1,
            noise_max: 0.3,
            noise_period: 12000.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub kind: SynthKind,
    pub n: usize,
    pub seed: u64,
    /// Grid step of the GP inputs `x_i = i · spacing`.
    pub spacing: f64,
    pub jitter: JitterSpec,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JitterSpec {
    pub start: f64,
    pub max: f64,
}

impl Default for JitterSpec {
    fn default() -> Self {
        let l = JitterLadder::default();
        JitterSpec { start: l.start, max: l.max }
    }
}

impl SynthSpec {
    pub fn new(kind: SynthKind, n: usize, seed: u64) -> Self {
        SynthSpec {
            kind,
            n,
            seed,
            spacing: 0.02,
            jitter: JitterSpec::default(),
        }
    }

    pub fn stationary_gp(lengthscale: f64, n: usize, seed: u64) -> Self {
        Self::new(SynthKind::StationaryGp { lengthscale }, n, seed)
    }

    /// Two halves: `first` length scale up to `n/2`, `second` after.
    pub fn two_segment_gp(first: f64, second: f64, n: usize, seed: u64) -> Self {
        Self::new(
            SynthKind::PiecewiseGp {
                lengthscales: vec![first, second],
                starts: vec![n / 2 + 1],
            },
            n,
            seed,
        )
    }

    pub fn unit_root(sigma: f64, n: usize, seed: u64) -> Self {
        Self::new(SynthKind::UnitRoot { sigma }, n, seed)
    }

    pub fn noisy_trend(n: usize, seed: u64) -> Self {
        Self::new(SynthKind::NoisyTrend(NoisyTrend::default()), n, seed)
    }

    fn ladder(&self) -> JitterLadder {
        JitterLadder {
            start: self.jitter.start,
            max: self.jitter.max,
            factor: 10.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 1 {
            return Err(Error::Config("n must be >= 1".into()));
        }
        if !(self.spacing > 0.0 && self.spacing.is_finite()) {
            return Err(Error::Config("spacing must be positive".into()));
        }
        let positive = |v: f64, what: &str| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::Config(format!("{what} must be positive, got {v}")))
            }
        };
        match &self.kind {
            SynthKind::StationaryGp { lengthscale } => positive(*lengthscale, "lengthscale"),
            SynthKind::PiecewiseGp { lengthscales, starts } => {
                if lengthscales.len() != starts.len() + 1 {
                    return Err(Error::Config(
                        "piecewise GP needs one more length scale than segment starts".into(),
                    ));
                }
                for l in lengthscales {
                    positive(*l, "lengthscale")?;
                }
                let mut prev = 1;
                for &s in starts {
                    if s <= prev || s > self.n {
                        return Err(Error::Config(format!(
                            "segment starts must increase strictly within 2..={}",
                            self.n
                        )));
                    }
                    prev = s;
                }
                Ok(())
            }
            SynthKind::UnitRoot { sigma } => {
                if *sigma >= 0.0 && sigma.is_finite() {
                    Ok(())
                } else {
                    Err(Error::Config("sigma must be >= 0".into()))
                }
            }
            SynthKind::NoisyTrend(t) => {
                positive(t.period, "period")?;
                positive(t.noise_period, "noise_period")?;
                if !(t.noise_min >= 0.0 && t.noise_max >= t.noise_min) {
                    return Err(Error::Config("need 0 <= noise_min <= noise_max".into()));
                }
                Ok(())
            }
        }
    }

    fn grid(&self, from: usize, to: usize) -> Vec<f64> {
        (from..=to).map(|i| i as f64 * self.spacing).collect()
    }
}

/// Draws `MVN(0, K + jitter·I)` on `xs` by transforming standard normals.
fn draw_gp(xs: &[f64], lengthscale: f64, ladder: &JitterLadder, rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
    if xs.len() > MAX_DENSE_N {
        return Err(Error::Precondition(format!(
            "dense GP sampling limited to {MAX_DENSE_N} points"
        )));
    }
    let rows: Vec<Vec<f64>> = xs.iter().map(|&x| vec![x]).collect();
    let kernel = SqeKernel::new(vec![lengthscale])?;
    let factor = PairwiseSqDiffs::new(&points(&rows)).factor(&kernel, ladder)?;
    let z: Vec<f64> = (0..xs.len()).map(|_| StandardNormal.sample(rng)).collect();
    Ok(factor.lower_times(&z))
}

fn rng_for(spec: &SynthSpec) -> ChaCha8Rng {
    substream(spec.seed, Stream::Synth, 0)
}

fn grid_dataset(xs: Vec<f64>, ys: Vec<f64>) -> Result<Dataset> {
    Dataset::scalar(xs.into_iter().map(|x| vec![x]).collect(), ys)
}

pub fn sample_gp(spec: &SynthSpec) -> Result<Dataset> {
    spec.validate()?;
    let SynthKind::StationaryGp { lengthscale } = spec.kind else {
        return Err(Error::Config("sample_gp expects a stationary_gp spec".into()));
    };
    let xs = spec.grid(1, spec.n);
    let ys = draw_gp(&xs, lengthscale, &spec.ladder(), &mut rng_for(spec))?;
    grid_dataset(xs, ys)
}

pub fn sample_piecewise_gp(spec: &SynthSpec) -> Result<Dataset> {
    spec.validate()?;
    let SynthKind::PiecewiseGp { lengthscales, starts } = &spec.kind else {
        return Err(Error::Config("sample_piecewise_gp expects a piecewise_gp spec".into()));
    };
    let mut rng = rng_for(spec);
    let ladder = spec.ladder();
    let bounds: Vec<usize> = std::iter::once(1)
        .chain(starts.iter().copied())
        .chain(std::iter::once(spec.n + 1))
        .collect();
    let mut xs = Vec::with_capacity(spec.n);
    let mut ys = Vec::with_capacity(spec.n);
    for (w, &l) in bounds.windows(2).zip(lengthscales) {
        let seg = spec.grid(w[0], w[1] - 1);
        ys.extend(draw_gp(&seg, l, &ladder, &mut rng)?);
        xs.extend(seg);
    }
    grid_dataset(xs, ys)
}

pub fn sample_unit_root(spec: &SynthSpec) -> Result<Dataset> {
    spec.validate()?;
    let SynthKind::UnitRoot { sigma } = spec.kind else {
        return Err(Error::Config("sample_unit_root expects a unit_root spec".into()));
    };
    let mut rng = rng_for(spec);
    let step = Normal::new(0.0, sigma).map_err(|e| Error::Config(e.to_string()))?;
    let ys: Vec<f64> = (0..spec.n)
        .scan(0.0, |y, _| {
            *y += step.sample(&mut rng);
            Some(*y)
        })
        .collect();
    Dataset::series(ys)
}

/// Noisy-trend draw plus the noise bound `a_i` used at every index.
#[derive(Debug, Clone, PartialEq)]
pub struct NoisySeries {
    pub data: Dataset,
    pub noise_bound: Vec<f64>,
}

impl NoisySeries {
    /// Per-index bands `δ_i = a_i` for the `N - 1` L-values.
    pub fn tolerance(&self) -> Tolerance {
        Tolerance::PerIndex(self.noise_bound[..self.noise_bound.len() - 1].to_vec())
    }
}

pub fn sample_noisy_trend(spec: &SynthSpec) -> Result<NoisySeries> {
    spec.validate()?;
    let SynthKind::NoisyTrend(t) = spec.kind else {
        return Err(Error::Config("sample_noisy_trend expects a noisy_trend spec".into()));
    };
    let mut rng = rng_for(spec);
    let n = spec.n as f64;
    let tau = std::f64::consts::TAU;
    let mut ys = Vec::with_capacity(spec.n);
    let mut bounds = Vec::with_capacity(spec.n);
    for i in 1..=spec.n {
        let ti = i as f64;
        let amp = t.amplitude * (1.0 + ti / n);
        let trend = t.drift * ti + amp * (tau * ti / t.period).sin();
        let a = t.noise_min
            + (t.noise_max - t.noise_min) * 0.5 * (1.0 - (tau * ti / t.noise_period).cos());
        let u = if a > 0.0 { rng.random_range(-a..=a) } else { 0.0 };
        ys.push(trend + u);
        bounds.push(a);
    }
    Ok(NoisySeries {
        data: Dataset::series(ys)?,
        noise_bound: bounds,
    })
}

/// Dispatch on `spec.kind`. Noise bounds are returned for noisy-trend specs.
pub fn sample(spec: &SynthSpec) -> Result<(Dataset, Option<Vec<f64>>)> {
    match spec.kind {
        SynthKind::StationaryGp { .. } => Ok((sample_gp(spec)?, None)),
        SynthKind::PiecewiseGp { .. } => Ok((sample_piecewise_gp(spec)?, None)),
        SynthKind::UnitRoot { .. } => Ok((sample_unit_root(spec)?, None)),
        SynthKind::NoisyTrend(_) => {
            let s = sample_noisy_trend(spec)?;
            Ok((s.data, Some(s.noise_bound)))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_point_is_one_normal_draw() {
        let ds = sample_gp(&SynthSpec::stationary_gp(1.0, 1, 3)).unwrap();
        assert_eq!(ds.len(), 1);
        let z: f64 = StandardNormal.sample(&mut substream(3, Stream::Synth, 0));
        assert!((ds.output(0)[0] - z * (1.0 + 1e-8f64).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn huge_lengthscale_is_nearly_constant() {
        let flat = (0..20)
            .filter(|&s| {
                let y = sample_gp(&SynthSpec::stationary_gp(1e12, 100, s)).unwrap().output_column(0);
                let (lo, hi) = y.iter().fold((f64::MAX, f64::MIN), |(a, b), &v| (a.min(v), b.max(v)));
                hi - lo < 0.01
            })
            .count();
        assert!(flat >= 19, "{flat}/20");
    }

    #[test]
    fn generators_are_deterministic() {
        let specs = [
            SynthSpec::stationary_gp(2.0, 50, 9),
            SynthSpec::two_segment_gp(5.0, 0.05, 60, 9),
            SynthSpec::unit_root(1.0, 80, 9),
            SynthSpec::noisy_trend(100, 9),
        ];
        for spec in &specs {
            assert_eq!(sample(spec).unwrap(), sample(spec).unwrap());
        }
        let a = sample_gp(&SynthSpec::stationary_gp(2.0, 50, 9)).unwrap();
        let b = sample_gp(&SynthSpec::stationary_gp(2.0, 50, 10)).unwrap();
        assert_ne!(a, b);
    }

    #[test]
    fn one_segment_is_stationary_gp() {
        let mut piecewise = SynthSpec::stationary_gp(0.7, 40, 5);
        piecewise.kind = SynthKind::PiecewiseGp { lengthscales: vec![0.7], starts: vec![] };
        assert_eq!(
            sample_piecewise_gp(&piecewise).unwrap(),
            sample_gp(&SynthSpec::stationary_gp(0.7, 40, 5)).unwrap()
        );
    }

    #[test]
    fn piecewise_layout() {
        let ds = sample_piecewise_gp(&SynthSpec::two_segment_gp(5.0, 0.05, 500, 1)).unwrap();
        assert_eq!(ds.len(), 500);
        assert_eq!(ds.input(0), &[0.02]);
        assert_eq!(ds.input(499), &[10.0]);
        let bad = SynthSpec::new(
            SynthKind::PiecewiseGp { lengthscales: vec![1.0, 2.0], starts: vec![600] },
            500,
            1,
        );
        assert!(sample_piecewise_gp(&bad).is_err());
    }

    #[test]
    fn zero_sigma_walk_is_flat() {
        let ds = sample_unit_root(&SynthSpec::unit_root(0.0, 30, 4)).unwrap();
        assert!(ds.output_column(0).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn noise_free_trend_has_zero_bounds() {
        let mut spec = SynthSpec::noisy_trend(200, 2);
        if let SynthKind::NoisyTrend(t) = &mut spec.kind {
            t.noise_min = 0.0;
            t.noise_max = 0.0;
        }
        let s = sample_noisy_trend(&spec).unwrap();
        assert!(s.noise_bound.iter().all(|&a| a == 0.0));
        let y = s.data.output_column(0);
        let expect = 2e-3 * 7.0 + 5.0 * (1.0 + 7.0 / 200.0) * (std::f64::consts::TAU * 7.0 / 8000.0).sin();
        assert!((y[6] - expect).abs() < 1e-12);
        assert_eq!(s.tolerance(), Tolerance::PerIndex(vec![0.0; 199]));
    }

    #[test]
    fn noise_stays_within_recorded_bounds() {
        let mut spec = SynthSpec::noisy_trend(5000, 6);
        let s = sample_noisy_trend(&spec).unwrap();
        if let SynthKind::NoisyTrend(t) = &mut spec.kind {
            t.noise_min = 0.0;
            t.noise_max = 0.0;
        }
        let clean = sample_noisy_trend(&spec).unwrap().data.output_column(0);
        for ((y, c), a) in s.data.output_column(0).iter().zip(&clean).zip(&s.noise_bound) {
            assert!((y - c).abs() <= a + 1e-12);
        }
    }

    #[test]
    fn marginal_is_standard_normal() {
        let mut v: Vec<f64> = (0..200)
            .map(|s| sample_gp(&SynthSpec::stationary_gp(1.0, 10, s)).unwrap().output(4)[0])
            .collect();
        v.sort_by(f64::total_cmp);
        let n = v.len() as f64;
        let ks = v
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let f = crate::stationarity::normal_cdf(x);
                (f - i as f64 / n).abs().max((f - (i + 1) as f64 / n).abs())
            })
            .fold(0.0, f64::max);
        assert!(ks < 0.1, "KS = {ks}");
    }
}
