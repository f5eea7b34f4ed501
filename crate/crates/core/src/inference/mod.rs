//! MCMC over SQE length scales.
//!
//! The stationary model runs plain random-walk MH on the length-scale
//! vector. The nonstationary model runs the same MH until the lookback
//! windows are full, then alternates two blocks per iteration: MH on the
//! length scales given the data, and for every dimension an inner update
//! whose one-step-ahead prediction becomes the length scale carried into
//! the next iteration.

mod hpd;
mod lookback;
mod mh;

pub use hpd::{hpd_count, hpd_interval, Interval, MIN_HPD_SAMPLES};
pub use lookback::{
    lookback_step, Append, InnerModel, LookbackOutcome, LookbackWindow, MIN_LENGTHSCALE,
    MIN_WINDOW_VARIANCE,
};
pub use mh::{mh_update, MhState, Proposal};

use std::io::Write;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::dataset::{standardize, Dataset, StandardizedOutputs};
use crate::error::{Error, Result};
use crate::gp::{log_likelihood, points, JitterLadder, PairwiseSqDiffs, SqeKernel};
use crate::rng::{substream, Stream};

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

pub(crate) fn normal_log_pdf(x: f64, mean: f64, sd: f64) -> f64 {
    let z = (x - mean) / sd;
    -LN_SQRT_2PI - sd.ln() - 0.5 * z * z
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Stationary,
    Nonstationary,
}

impl ModelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Stationary => "stationary",
            ModelKind::Nonstationary => "nonstationary",
        }
    }
}

impl std::str::FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "stationary" => Ok(ModelKind::Stationary),
            "nonstationary" | "non-stationary" => Ok(ModelKind::Nonstationary),
            other => Err(Error::Config(format!("unknown model {other:?}"))),
        }
    }
}

/// Which value a lookback window stores for iteration `t`.
///
/// With `Predicted` the windows only ever see their own predictions once
/// phase 2 starts, so the data-driven MH draw of each iteration does not
/// reach the carried length scales. `Sampled` feeds that draw into the
/// window instead and keeps the data in the loop.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum WindowSource {
    /// The inner GP's prediction.
    #[default]
    Predicted,
    /// The length scale drawn by the data-driven MH block.
    Sampled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChainConfig {
    pub model: ModelKind,
    pub n_iter: usize,
    pub n_burn: usize,
    pub lookback: usize,
    /// Initial length scales, also the prior means. Defaults to 1 per input.
    pub seeds: Option<Vec<f64>>,
    /// Defaults to `10 × seed`.
    pub prior_sd: Option<Vec<f64>>,
    /// Defaults to `0.1 × seed`.
    pub proposal_sd: Option<Vec<f64>>,
    /// Rescale the length-scale proposal during burn-in towards an
    /// acceptance rate of `ADAPT_TARGET`; scales are frozen afterwards.
    pub adapt: bool,
    pub delta_seed: f64,
    pub delta_prior_sd: f64,
    pub delta_proposal_sd: f64,
    pub window_source: WindowSource,
    pub jitter: f64,
    pub max_jitter: f64,
    pub rng_seed: u64,
}

impl Default for ChainConfig {
    fn default() -> Self {
        let ladder = JitterLadder::default();
        ChainConfig {
            model: ModelKind::Stationary,
            n_iter: 20_000,
            n_burn: 5_000,
            lookback: 100,
            seeds: None,
            prior_sd: None,
            proposal_sd: None,
            adapt: true,
            delta_seed: 1.0,
            delta_prior_sd: 10.0,
            delta_proposal_sd: 0.5,
            window_source: WindowSource::Predicted,
            jitter: ladder.start,
            max_jitter: ladder.max,
            rng_seed: 0,
        }
    }
}

/// `ChainConfig` with per-dimension vectors filled in.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedChain {
    pub seeds: Vec<f64>,
    pub prior_sd: Vec<f64>,
    pub proposal_sd: Vec<f64>,
}

impl ChainConfig {
    pub fn ladder(&self) -> JitterLadder {
        JitterLadder { start: self.jitter, max: self.max_jitter, factor: 10.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_iter == 0 {
            return Err(Error::Config("n_iter must be positive".into()));
        }
        if self.n_burn >= self.n_iter {
            return Err(Error::Config(format!(
                "n_burn ({}) must be smaller than n_iter ({})",
                self.n_burn, self.n_iter
            )));
        }
        if self.n_iter - self.n_burn < MIN_HPD_SAMPLES {
            return Err(Error::Config(format!(
                "need at least {MIN_HPD_SAMPLES} post-burn-in iterations"
            )));
        }
        if self.model == ModelKind::Nonstationary {
            if self.lookback < 2 {
                return Err(Error::Config("lookback must be >= 2".into()));
            }
            if self.n_burn + self.lookback >= self.n_iter {
                return Err(Error::Config(format!(
                    "nonstationary chains need n_burn + lookback ({}) < n_iter ({})",
                    self.n_burn + self.lookback,
                    self.n_iter
                )));
            }
        }
        for (name, v) in [
            ("delta_seed", self.delta_seed),
            ("delta_prior_sd", self.delta_prior_sd),
            ("delta_proposal_sd", self.delta_proposal_sd),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.jitter >= 0.0 && self.max_jitter >= self.jitter) {
            return Err(Error::Config("need 0 <= jitter <= max_jitter".into()));
        }
        Ok(())
    }

    pub fn resolve(&self, dim: usize) -> Result<ResolvedChain> {
        self.validate()?;
        let vector = |name: &str, v: &Option<Vec<f64>>, default: Vec<f64>| -> Result<Vec<f64>> {
            let v = v.clone().unwrap_or(default);
            if v.len() != dim {
                return Err(Error::Config(format!(
                    "{name} has {} entries for {dim} inputs",
                    v.len()
                )));
            }
            if let Some(x) = v.iter().find(|x| !(x.is_finite() && **x > 0.0)) {
                return Err(Error::Config(format!("{name} entries must be positive, got {x}")));
            }
            Ok(v)
        };
        let seeds = vector("seeds", &self.seeds, vec![1.0; dim])?;
        let prior_sd = vector("prior_sd", &self.prior_sd, seeds.iter().map(|s| 10.0 * s).collect())?;
        let proposal_sd = vector("proposal_sd", &self.proposal_sd, seeds.iter().map(|s| 0.1 * s).collect())?;
        Ok(ResolvedChain { seeds, prior_sd, proposal_sd })
    }
}

/// Training inputs and standardised responses for one output component.
#[derive(Debug, Clone)]
pub struct ChainData {
    pub x: DMatrix<f64>,
    pub y: Vec<f64>,
    pub standardization: StandardizedOutputs,
    pub component: usize,
    diffs: PairwiseSqDiffs,
}

impl ChainData {
    pub fn new(ds: &Dataset, component: usize) -> Result<Self> {
        ds.require_rows(2)?;
        if component >= ds.output_len() {
            return Err(Error::Precondition(format!(
                "output component {component} of {}",
                ds.output_len()
            )));
        }
        let so = standardize(ds)?;
        let x = points(&ds.input_rows());
        Ok(ChainData {
            diffs: PairwiseSqDiffs::new(&x),
            y: so.column(component),
            x,
            standardization: so,
            component,
        })
    }

    pub fn dim(&self) -> usize {
        self.x.ncols()
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }
}

/// Independent Normal priors on the length scales.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalPriors {
    pub mean: Vec<f64>,
    pub sd: Vec<f64>,
}

impl NormalPriors {
    pub fn log_density(&self, v: &[f64]) -> f64 {
        v.iter()
            .zip(&self.mean)
            .zip(&self.sd)
            .map(|((x, m), s)| normal_log_pdf(*x, *m, *s))
            .sum()
    }
}

/// Log likelihood of the standardised data under `ℓ` plus the log prior.
pub fn log_posterior_outer(
    ell: &[f64],
    data: &ChainData,
    priors: &NormalPriors,
    ladder: &JitterLadder,
) -> Result<f64> {
    if ell.len() != data.dim() {
        return Err(Error::Precondition(format!(
            "{} length scales for {}-dimensional inputs",
            ell.len(),
            data.dim()
        )));
    }
    let k = SqeKernel::new(ell.to_vec())?;
    let f = data.diffs.factor(&k, ladder)?;
    Ok(log_likelihood(&f, &data.y)? + priors.log_density(ell))
}

/// One iteration of the chain.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub iter: usize,
    pub ell: Vec<f64>,
    /// Empty for stationary chains.
    pub delta: Vec<f64>,
    pub log_post_outer: f64,
    /// `NaN` before the windows are full or when a window was degenerate.
    pub log_post_inner: Vec<f64>,
    pub accepted: bool,
    pub inner_accepted: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainTrace {
    pub model: ModelKind,
    pub dim: usize,
    pub n_burn: usize,
    pub rows: Vec<TraceRow>,
}

impl ChainTrace {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn post_burn(&self) -> &[TraceRow] {
        &self.rows[self.n_burn.min(self.rows.len())..]
    }

    /// Post-burn-in values of length scale `m`.
    pub fn ell_samples(&self, m: usize) -> Vec<f64> {
        self.post_burn().iter().map(|r| r.ell[m]).collect()
    }

    pub fn delta_samples(&self, m: usize) -> Vec<f64> {
        self.post_burn().iter().map(|r| r.delta[m]).collect()
    }

    pub fn header(model: ModelKind, dim: usize) -> Vec<String> {
        let mut h = vec!["iter".to_string()];
        h.extend((1..=dim).map(|m| format!("ell_{m}")));
        if model == ModelKind::Nonstationary {
            h.extend((1..=dim).map(|m| format!("delta_{m}")));
        }
        h.push("log_post_outer".into());
        if model == ModelKind::Nonstationary {
            h.extend((1..=dim).map(|m| format!("log_post_inner_{m}")));
        }
        h
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = TraceWriter::new(writer, self.model, self.dim)?;
        for r in &self.rows {
            w.write(r)?;
        }
        w.finish()
    }
}

/// Streams trace rows to CSV as the chain runs.
pub struct TraceWriter<W: Write> {
    inner: csv::Writer<W>,
    model: ModelKind,
}

impl<W: Write> TraceWriter<W> {
    pub fn new(writer: W, model: ModelKind, dim: usize) -> Result<Self> {
        let mut inner = csv::Writer::from_writer(writer);
        inner.write_record(ChainTrace::header(model, dim))?;
        Ok(TraceWriter { inner, model })
    }

    pub fn write(&mut self, r: &TraceRow) -> Result<()> {
        let mut rec = vec![r.iter.to_string()];
        rec.extend(r.ell.iter().map(f64::to_string));
        if self.model == ModelKind::Nonstationary {
            rec.extend(r.delta.iter().map(f64::to_string));
        }
        rec.push(r.log_post_outer.to_string());
        if self.model == ModelKind::Nonstationary {
            rec.extend(r.log_post_inner.iter().map(f64::to_string));
        }
        self.inner.write_record(rec)?;
        Ok(())
    }

    pub fn flush(&mut self) -> Result<()> {
        self.inner.flush().map_err(|e| Error::io("trace", e))
    }

    pub fn finish(mut self) -> Result<()> {
        self.flush()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamSummary {
    pub name: String,
    pub mean: f64,
    pub hpd: Interval,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorSummary {
    pub params: Vec<ParamSummary>,
    pub n_samples: usize,
    pub hpd_mass: f64,
    pub acceptance_rate: f64,
    /// Nonstationary chains only, one per dimension.
    pub inner_acceptance_rate: Vec<f64>,
    pub warnings: Vec<String>,
}

impl PosteriorSummary {
    pub fn param(&self, name: &str) -> Option<&ParamSummary> {
        self.params.iter().find(|p| p.name == name)
    }

    /// Posterior means of `ell_1..ell_d`.
    pub fn ell_means(&self) -> Vec<f64> {
        self.params
            .iter()
            .filter(|p| p.name.starts_with("ell_"))
            .map(|p| p.mean)
            .collect()
    }
}

pub const HPD_MASS: f64 = 0.95;
pub const ADAPT_BATCH: usize = 50;
pub const ADAPT_TARGET: f64 = 0.3;
const ACCEPTANCE_BAND: (f64, f64) = (0.05, 0.9);

fn rate(flags: impl Iterator<Item = bool>) -> f64 {
    let (mut n, mut k) = (0usize, 0usize);
    for f in flags {
        n += 1;
        k += usize::from(f);
    }
    if n == 0 {
        f64::NAN
    } else {
        k as f64 / n as f64
    }
}

pub fn summarize(trace: &ChainTrace) -> Result<PosteriorSummary> {
    let post = trace.post_burn();
    let mut params = Vec::new();
    let mut warnings = Vec::new();
    let mut push = |name: String, xs: Vec<f64>| -> Result<()> {
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        let hpd = hpd_interval(&xs, HPD_MASS)?;
        if !hpd.contains(mean) {
            warnings.push(format!("{name}: mean {mean} outside its HPD interval (multimodal trace?)"));
        }
        params.push(ParamSummary { name, mean, hpd });
        Ok(())
    };
    for m in 0..trace.dim {
        push(format!("ell_{}", m + 1), trace.ell_samples(m))?;
    }
    if trace.model == ModelKind::Nonstationary {
        for m in 0..trace.dim {
            push(format!("delta_{}", m + 1), trace.delta_samples(m))?;
        }
    }
    let acceptance_rate = rate(post.iter().map(|r| r.accepted));
    let inner_acceptance_rate: Vec<f64> = if trace.model == ModelKind::Nonstationary {
        (0..trace.dim)
            .map(|m| rate(post.iter().filter(|r| r.log_post_inner[m].is_finite()).map(|r| r.inner_accepted[m])))
            .collect()
    } else {
        Vec::new()
    };
    let (lo, hi) = ACCEPTANCE_BAND;
    for (what, r) in std::iter::once(("outer".to_string(), acceptance_rate))
        .chain(inner_acceptance_rate.iter().enumerate().map(|(m, r)| (format!("delta_{}", m + 1), *r)))
    {
        if !(r > lo && r < hi) {
            warnings.push(format!("{what} acceptance rate {r:.3} outside ({lo}, {hi})"));
        }
    }
    Ok(PosteriorSummary {
        params,
        n_samples: post.len(),
        hpd_mass: HPD_MASS,
        acceptance_rate,
        inner_acceptance_rate,
        warnings,
    })
}

#[derive(Debug, Clone)]
pub struct ChainOutput {
    pub trace: ChainTrace,
    pub summary: PosteriorSummary,
    /// Length-scale proposal scales used after burn-in.
    pub proposal_sd: Vec<f64>,
}

pub fn run_chain(cfg: &ChainConfig, data: &ChainData) -> Result<ChainOutput> {
    let mut rows = Vec::with_capacity(cfg.n_iter);
    let proposal_sd = run_chain_with(cfg, data, |r| {
        rows.push(r.clone());
        Ok(())
    })?;
    let trace = ChainTrace { model: cfg.model, dim: data.dim(), n_burn: cfg.n_burn, rows };
    let summary = summarize(&trace)?;
    Ok(ChainOutput { trace, summary, proposal_sd })
}

/// Runs the chain, handing every iteration to `sink` as soon as it is done.
/// Returns the length-scale proposal scales in force after burn-in.
pub fn run_chain_with<F>(cfg: &ChainConfig, data: &ChainData, mut sink: F) -> Result<Vec<f64>>
where
    F: FnMut(&TraceRow) -> Result<()>,
{
    let dim = data.dim();
    let r = cfg.resolve(dim)?;
    let ladder = cfg.ladder();
    let priors = NormalPriors { mean: r.seeds.clone(), sd: r.prior_sd.clone() };
    let outer = |ell: &[f64]| match log_posterior_outer(ell, data, &priors, &ladder) {
        Err(Error::NotPositiveDefinite { .. }) => Ok(f64::NEG_INFINITY),
        other => other,
    };
    let mut scales = r.proposal_sd.clone();
    let mut batch_accepts = 0usize;
    let inner = match cfg.model {
        ModelKind::Stationary => None,
        ModelKind::Nonstationary => Some(InnerModel::new(
            cfg.lookback,
            cfg.delta_seed,
            cfg.delta_prior_sd,
            cfg.delta_proposal_sd,
            ladder,
        )?),
    };
    let append = match cfg.window_source {
        WindowSource::Sampled => Append::Current,
        WindowSource::Predicted => Append::Predicted,
    };
    let stream = match cfg.model {
        ModelKind::Stationary => Stream::StationaryChain,
        ModelKind::Nonstationary => Stream::NonstationaryChain,
    };
    let mut rng = substream(cfg.rng_seed, stream, 0);
    let mut inner_rngs: Vec<_> = (0..dim)
        .map(|m| substream(cfg.rng_seed, Stream::Lookback, m as u32))
        .collect();

    let chain_err = |iteration: usize| move |e: Error| Error::Chain { iteration, source: Box::new(e) };
    let mut state = MhState::new(r.seeds.clone(), outer).map_err(chain_err(0))?;
    let phase1_end = cfg.n_burn + cfg.lookback;
    let mut windows: Vec<LookbackWindow> = Vec::new();
    let mut history: Vec<Vec<f64>> = vec![Vec::new(); dim];

    for t in 1..=cfg.n_iter {
        let proposal = Proposal { sd: &scales, positive: true };
        let (next, accepted) = mh_update(state, outer, &proposal, &mut rng).map_err(chain_err(t))?;
        state = next;
        batch_accepts += usize::from(accepted);
        if t % ADAPT_BATCH == 0 {
            if cfg.adapt && t <= cfg.n_burn {
                let rate = batch_accepts as f64 / ADAPT_BATCH as f64;
                let factor = (2.0 * (rate - ADAPT_TARGET)).exp();
                for s in &mut scales {
                    *s = (*s * factor).max(1e-12);
                }
            }
            batch_accepts = 0;
        }
        let mut row = TraceRow {
            iter: t,
            ell: state.value.clone(),
            delta: Vec::new(),
            log_post_outer: state.log_target,
            log_post_inner: Vec::new(),
            accepted,
            inner_accepted: Vec::new(),
        };
        if let Some(inner) = &inner {
            if t <= phase1_end {
                if t > cfg.n_burn {
                    for (m, h) in history.iter_mut().enumerate() {
                        h.push(state.value[m]);
                    }
                }
                if t == phase1_end {
                    windows = history
                        .iter()
                        .map(|h| LookbackWindow::new(cfg.n_burn + 1, h.clone(), cfg.delta_seed))
                        .collect::<Result<_>>()
                        .map_err(chain_err(t))?;
                }
                row.delta = vec![cfg.delta_seed; dim];
                row.log_post_inner = vec![f64::NAN; dim];
                row.inner_accepted = vec![false; dim];
            } else {
                let mut ell = state.value.clone();
                for m in 0..dim {
                    let out = lookback_step(&mut windows[m], t, ell[m], append, inner, &mut inner_rngs[m])
                        .map_err(chain_err(t))?;
                    ell[m] = out.lengthscale;
                    row.delta.push(windows[m].delta());
                    row.log_post_inner.push(out.log_post_inner);
                    row.inner_accepted.push(out.accepted);
                }
                if ell != state.value {
                    state = MhState::new(ell, outer).map_err(chain_err(t))?;
                }
                row.ell = state.value.clone();
                row.log_post_outer = state.log_target;
            }
        }
        sink(&row).map_err(chain_err(t))?;
    }
    Ok(scales)
}
