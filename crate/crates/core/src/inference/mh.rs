//! Gaussian random-walk Metropolis-Hastings with a joint block proposal.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

/// A point of the chain together with its cached log target.
#[derive(Debug, Clone, PartialEq)]
pub struct MhState {
    pub value: Vec<f64>,
    pub log_target: f64,
}

impl MhState {
    pub fn new<F>(value: Vec<f64>, mut log_target: F) -> Result<Self>
    where
        F: FnMut(&[f64]) -> Result<f64>,
    {
        let lt = log_target(&value)?;
        if !lt.is_finite() {
            return Err(Error::NonFinite(format!("log target {lt} at the initial state")));
        }
        Ok(MhState { value, log_target: lt })
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Proposal<'a> {
    pub sd: &'a [f64],
    /// Reject any proposal with a coordinate `<= 0` without evaluating it.
    pub positive: bool,
}

/// One joint random-walk step. Every call consumes the same number of
/// random draws (one normal per coordinate and one uniform) whatever the
/// outcome, so chains stay aligned across configurations.
pub fn mh_update<R, F>(
    state: MhState,
    mut log_target: F,
    proposal: &Proposal<'_>,
    rng: &mut R,
) -> Result<(MhState, bool)>
where
    R: Rng + ?Sized,
    F: FnMut(&[f64]) -> Result<f64>,
{
    if !state.log_target.is_finite() {
        return Err(Error::NonFinite(format!(
            "log target {} at the current state",
            state.log_target
        )));
    }
    if proposal.sd.len() != state.value.len() {
        return Err(Error::Precondition(format!(
            "{} proposal scales for {} parameters",
            proposal.sd.len(),
            state.value.len()
        )));
    }
    let candidate: Vec<f64> = state
        .value
        .iter()
        .zip(proposal.sd)
        .map(|(v, s)| v + s * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng))
        .collect();
    let u: f64 = rng.random();
    if proposal.positive && candidate.iter().any(|&v| v <= 0.0) {
        return Ok((state, false));
    }
    let lt = log_target(&candidate)?;
    if lt.is_nan() {
        return Err(Error::NonFinite("log target is NaN at a proposal".into()));
    }
    if u.ln() < lt - state.log_target {
        Ok((MhState { value: candidate, log_target: lt }, true))
    } else {
        Ok((state, false))
    }
}
