//! The inner stationary GP over recent length-scale values.
//!
//! Each input dimension keeps a window of the last `T_L` values of its
//! length scale, indexed by iteration. The inner SQE kernel
//! `exp(-(t_a - t_b)² / δ)` is fitted to the standardised window by one MH
//! step on `δ`, and its closed-form predictive mean one step ahead becomes
//! the next length scale.

use std::collections::VecDeque;

use nalgebra::DVector;
use rand::Rng;

use super::mh::{mh_update, MhState, Proposal};
use crate::error::{Error, Result};
use crate::gp::{log_likelihood, JitterLadder, PairwiseSqDiffs, SqeKernel};

/// Lower bound on a predicted length scale.
pub const MIN_LENGTHSCALE: f64 = 1e-6;

/// Windows whose sample variance falls below this are left alone.
pub const MIN_WINDOW_VARIANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct LookbackWindow {
    first: usize,
    values: VecDeque<f64>,
    delta: f64,
}

impl LookbackWindow {
    /// Window holding `values` at consecutive indices starting at `first`.
    pub fn new(first: usize, values: Vec<f64>, delta: f64) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::Precondition("lookback window needs at least two values".into()));
        }
        if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
            return Err(Error::Precondition(format!("window value {v} is not positive")));
        }
        if !(delta.is_finite() && delta > 0.0) {
            return Err(Error::Precondition(format!("inner length scale {delta} is not positive")));
        }
        Ok(LookbackWindow { first, values: values.into(), delta })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn first_index(&self) -> usize {
        self.first
    }

    pub fn last_index(&self) -> usize {
        self.first + self.values.len() - 1
    }

    pub fn indices(&self) -> Vec<usize> {
        (self.first..=self.last_index()).collect()
    }

    pub fn values(&self) -> Vec<f64> {
        self.values.iter().copied().collect()
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Drop the oldest entry and append `(t, value)`; `t` must follow the
    /// last index.
    pub fn slide(&mut self, t: usize, value: f64) -> Result<()> {
        if t != self.last_index() + 1 {
            return Err(Error::Precondition(format!(
                "window ends at {} but the next index is {t}",
                self.last_index()
            )));
        }
        if !(value.is_finite() && value > 0.0) {
            return Err(Error::Precondition(format!("window value {value} is not positive")));
        }
        self.values.pop_front();
        self.values.push_back(value);
        self.first += 1;
        Ok(())
    }

    fn standardized(&self) -> Option<(Vec<f64>, f64, f64)> {
        let n = self.values.len() as f64;
        let mean = self.values.iter().sum::<f64>() / n;
        let var = self.values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        if !(var >= MIN_WINDOW_VARIANCE) {
            return None;
        }
        let sd = var.sqrt();
        Some((self.values.iter().map(|v| (v - mean) / sd).collect(), mean, sd))
    }
}

/// Prior, proposal and factorisation settings for `δ`, plus the cached
/// squared index differences of a window of fixed length.
#[derive(Debug, Clone)]
pub struct InnerModel {
    pub prior_mean: f64,
    pub prior_sd: f64,
    pub proposal_sd: f64,
    pub ladder: JitterLadder,
    window_len: usize,
    diffs: PairwiseSqDiffs,
}

impl InnerModel {
    pub fn new(window_len: usize, prior_mean: f64, prior_sd: f64, proposal_sd: f64, ladder: JitterLadder) -> Result<Self> {
        if window_len < 2 {
            return Err(Error::Config("lookback window length must be >= 2".into()));
        }
        if !(prior_sd > 0.0 && proposal_sd > 0.0) {
            return Err(Error::Config("inner prior and proposal scales must be positive".into()));
        }
        // the kernel is translation invariant, so positions 0..T_L stand in
        // for the actual iteration indices
        let x = nalgebra::DMatrix::from_fn(window_len, 1, |i, _| i as f64);
        Ok(InnerModel {
            prior_mean,
            prior_sd,
            proposal_sd,
            ladder,
            window_len,
            diffs: PairwiseSqDiffs::new(&x),
        })
    }

    pub fn window_len(&self) -> usize {
        self.window_len
    }

    /// MVN log likelihood of the standardised window plus the Normal prior.
    pub fn log_posterior(&self, delta: f64, z: &[f64]) -> Result<f64> {
        if !(delta > 0.0) {
            return Err(Error::Precondition(format!("inner length scale {delta} must be positive")));
        }
        let k = SqeKernel::new(vec![delta])?;
        let f = self.diffs.factor(&k, &self.ladder)?;
        Ok(log_likelihood(&f, z)? + super::normal_log_pdf(delta, self.prior_mean, self.prior_sd))
    }

    /// Predictive mean one step past the end of the window.
    pub fn predict_next(&self, delta: f64, z: &[f64]) -> Result<f64> {
        let k = SqeKernel::new(vec![delta])?;
        let f = self.diffs.factor(&k, &self.ladder)?;
        let alpha = f.solve(&DVector::from_row_slice(z));
        let t = self.window_len as f64;
        Ok((0..self.window_len)
            .map(|i| (-(t - i as f64).powi(2) / delta).exp() * alpha[i])
            .sum())
    }
}

/// What the window receives at the end of a step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Append {
    /// The predicted value.
    Predicted,
    /// The value passed in as `current`.
    Current,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LookbackOutcome {
    /// The length scale to carry into the next iteration.
    pub lengthscale: f64,
    /// `NaN` when the window was degenerate.
    pub log_post_inner: f64,
    pub accepted: bool,
    pub degenerate: bool,
}

/// One inner update at iteration `t`: MH on `δ`, one-step-ahead prediction,
/// then the window slides to end at `t`. A window with (near) zero variance
/// skips the update and prediction and carries `current` forward.
pub fn lookback_step<R: Rng + ?Sized>(
    w: &mut LookbackWindow,
    t: usize,
    current: f64,
    append: Append,
    inner: &InnerModel,
    rng: &mut R,
) -> Result<LookbackOutcome> {
    if w.len() != inner.window_len {
        return Err(Error::Precondition(format!(
            "window holds {} values, expected {}",
            w.len(),
            inner.window_len
        )));
    }
    if t != w.last_index() + 1 {
        return Err(Error::Precondition(format!(
            "window ends at {} but the step is for index {t}",
            w.last_index()
        )));
    }
    let Some((z, mean, sd)) = w.standardized() else {
        w.slide(t, current)?;
        return Ok(LookbackOutcome {
            lengthscale: current,
            log_post_inner: f64::NAN,
            accepted: false,
            degenerate: true,
        });
    };
    let target = |d: &[f64]| match inner.log_posterior(d[0], &z) {
        Err(Error::NotPositiveDefinite { .. }) => Ok(f64::NEG_INFINITY),
        other => other,
    };
    let state = MhState::new(vec![w.delta], target)?;
    let (state, accepted) = mh_update(
        state,
        target,
        &Proposal { sd: &[inner.proposal_sd], positive: true },
        rng,
    )?;
    w.delta = state.value[0];
    let predicted = (inner.predict_next(w.delta, &z)? * sd + mean).max(MIN_LENGTHSCALE);
    w.slide(
        t,
        match append {
            Append::Predicted => predicted,
            Append::Current => current,
        },
    )?;
    Ok(LookbackOutcome {
        lengthscale: predicted,
        log_post_inner: state.log_target,
        accepted,
        degenerate: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DMatrix, Matrix3};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn model(len: usize, proposal_sd: f64) -> InnerModel {
        InnerModel::new(len, 2.0, 10.0, proposal_sd, JitterLadder::fixed(1e-8)).unwrap()
    }

    #[test]
    fn constant_window_carries_value_forward() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut w = LookbackWindow::new(1, vec![0.7; 5], 1.0).unwrap();
        let out = lookback_step(&mut w, 6, 0.7, Append::Predicted, &model(5, 0.5), &mut rng).unwrap();
        assert!(out.degenerate);
        assert_eq!(out.lengthscale, 0.7);
        assert_eq!(w.values(), vec![0.7; 5]);
        assert_eq!(w.delta(), 1.0);
    }

    #[test]
    fn hand_conditioning_three_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let delta = 2.0;
        let mut w = LookbackWindow::new(7, vec![1.0, 2.0, 3.0], delta).unwrap();
        // a zero proposal scale keeps δ fixed
        let inner = InnerModel::new(3, 2.0, 10.0, 1e-300, JitterLadder::fixed(1e-8)).unwrap();
        let out = lookback_step(&mut w, 10, 0.5, Append::Predicted, &inner, &mut rng).unwrap();

        let c = |a: f64, b: f64| (-(a - b) * (a - b) / delta).exp();
        let idx = [7.0, 8.0, 9.0];
        let psi = Matrix3::from_fn(|i, j| c(idx[i], idx[j]) + if i == j { 1e-8 } else { 0.0 });
        let k = nalgebra::Vector3::from_fn(|i, _| c(idx[i], 10.0));
        let z = nalgebra::Vector3::new(-1.0, 0.0, 1.0);
        let expect = 2.0 + (k.transpose() * psi.try_inverse().unwrap() * z)[0];
        assert!((out.lengthscale - expect).abs() < 1e-10, "{} vs {expect}", out.lengthscale);
        assert_eq!(w.indices(), vec![8, 9, 10]);
        assert_eq!(w.values()[2], out.lengthscale);
    }

    #[test]
    fn slide_bookkeeping() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let vals: Vec<f64> = (0..10).map(|i| 1.0 + 0.1 * ((i * 7 % 10) as f64)).collect();
        let mut w = LookbackWindow::new(21, vals.clone(), 1.0).unwrap();
        let inner = model(10, 0.3);
        for t in 31..60 {
            let out = lookback_step(&mut w, t, 1.25, Append::Current, &inner, &mut rng).unwrap();
            assert!(out.lengthscale >= MIN_LENGTHSCALE);
            assert_eq!(w.len(), 10);
            assert_eq!(w.last_index(), t);
            assert_eq!(*w.values().last().unwrap(), 1.25);
        }
        assert!(lookback_step(&mut w, 70, 1.0, Append::Current, &inner, &mut rng).is_err());
        assert!(w.slide(61, 1.0).is_err());
    }

    #[test]
    fn prediction_is_floored() {
        // an accelerating decline extrapolates below zero
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let vals: Vec<f64> = (0..8).map(|i| 10.0 - 0.2 * (i * i) as f64).collect();
        let mut w = LookbackWindow::new(1, vals, 30.0).unwrap();
        let inner = InnerModel::new(8, 30.0, 10.0, 1e-300, JitterLadder::default()).unwrap();
        let out = lookback_step(&mut w, 9, 1.0, Append::Predicted, &inner, &mut rng).unwrap();
        assert_eq!(out.lengthscale, MIN_LENGTHSCALE);
    }

    #[test]
    fn inner_posterior_matches_dense_density() {
        let inner = model(4, 0.5);
        let z = [0.5, -1.0, 1.2, -0.7];
        let d = 1.5;
        let m = DMatrix::from_fn(4, 4, |i, j| {
            (-((i as f64 - j as f64).powi(2)) / d).exp() + if i == j { 1e-8 } else { 0.0 }
        });
        let zv = nalgebra::DVector::from_row_slice(&z);
        let quad = (zv.transpose() * m.clone().try_inverse().unwrap() * &zv)[0];
        let ll = -0.5 * (4.0 * (2.0 * std::f64::consts::PI).ln() + m.determinant().ln() + quad);
        let prior = super::super::normal_log_pdf(d, 2.0, 10.0);
        assert!((inner.log_posterior(d, &z).unwrap() - ll - prior).abs() < 1e-9);
    }
}
