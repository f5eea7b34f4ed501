//! Augmented Dickey-Fuller unit-root test (constant, no trend) and the
//! least-squares engine behind it.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Asymptotic Dickey-Fuller critical values for the constant-only regression.
pub const CRITICAL_VALUES: [(&str, f64); 3] = [("1%", -3.430), ("5%", -2.862), ("10%", -2.567)];

#[derive(Debug, Clone, PartialEq)]
pub struct OlsFit {
    pub coefficients: Vec<f64>,
    /// `sqrt(diag(σ² (XᵀX)⁻¹))`; NaN when there are no residual degrees of freedom.
    pub std_errors: Vec<f64>,
    pub rss: f64,
}

/// Least squares through a Householder QR of `x`.
pub fn ols_solve(x: &DMatrix<f64>, y: &DVector<f64>) -> Result<OlsFit> {
    let (n, k) = x.shape();
    if n < k || k == 0 || y.len() != n {
        return Err(Error::Precondition(format!(
            "design {n}x{k} with response of length {}",
            y.len()
        )));
    }
    let qr = x.clone().qr();
    let r = qr.r();
    let max_diag = (0..k).map(|i| r[(i, i)].abs()).fold(0.0, f64::max);
    if max_diag == 0.0 || (0..k).any(|i| r[(i, i)].abs() <= 1e-10 * max_diag) {
        return Err(Error::RankDeficient);
    }
    let qty = qr.q().transpose() * y;
    let rhs = qty.rows(0, k).into_owned();
    let beta = r
        .solve_upper_triangular(&rhs)
        .ok_or(Error::RankDeficient)?;
    let resid = y - x * &beta;
    let rss = resid.norm_squared();
    let r_inv = r
        .solve_upper_triangular(&DMatrix::identity(k, k))
        .ok_or(Error::RankDeficient)?;
    let sigma2 = if n > k { rss / (n - k) as f64 } else { f64::NAN };
    let std_errors = (0..k)
        .map(|i| (sigma2 * r_inv.row(i).norm_squared()).sqrt())
        .collect();
    Ok(OlsFit {
        coefficients: beta.iter().copied().collect(),
        std_errors,
        rss,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum LagRule {
    /// Use exactly `max_lag` lagged differences.
    Fixed,
    /// Minimise AIC over `0..=max_lag` on a common sample.
    #[default]
    Aic,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdfConfig {
    /// `None` selects `floor(12 (n/100)^(1/4))`.
    pub max_lag: Option<usize>,
    pub lag_rule: LagRule,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdfResult {
    pub statistic: f64,
    pub lags_used: usize,
    pub n_effective: usize,
    pub critical_values: BTreeMap<String, f64>,
    /// Levels (from `"1%"`, `"5%"`, `"10%"`) at which the unit root is rejected.
    pub reject_at: Vec<String>,
    pub p_value: Option<f64>,
}

impl AdfResult {
    pub fn rejects(&self, level: &str) -> bool {
        self.reject_at.iter().any(|l| l == level)
    }
}

pub fn auto_max_lag(n: usize) -> usize {
    (12.0 * (n as f64 / 100.0).powf(0.25)).floor() as usize
}

/// Regression rows for `Δy_t = α + γ y_{t-1} + Σ φ_j Δy_{t-j}`, using the
/// last `nobs` differences. Columns: level, constant, lags 1..=lags.
fn adf_design(y: &[f64], lags: usize, nobs: usize) -> (DMatrix<f64>, DVector<f64>) {
    let dy: Vec<f64> = y.windows(2).map(|w| w[1] - w[0]).collect();
    let start = dy.len() - nobs;
    let x = DMatrix::from_fn(nobs, lags + 2, |r, c| {
        let t = start + r;
        match c {
            0 => y[t],
            1 => 1.0,
            j => dy[t - (j - 1)],
        }
    });
    let rhs = DVector::from_iterator(nobs, dy[start..].iter().copied());
    (x, rhs)
}

/// AIC lag choice on the common sample that the largest model can use.
fn select_lag_aic(y: &[f64], max_lag: usize) -> Result<usize> {
    let nobs = y.len() - 1 - max_lag;
    let (x, rhs) = adf_design(y, max_lag, nobs);
    // column scaling leaves every sub-model's RSS unchanged
    let scale: Vec<f64> = x
        .column_iter()
        .map(|c| (c.norm_squared() / nobs as f64).sqrt().max(f64::MIN_POSITIVE))
        .collect();
    let xs = DMatrix::from_fn(nobs, max_lag + 2, |r, c| x[(r, c)] / scale[c]);
    let gram = xs.transpose() * &xs;
    let cross = xs.transpose() * &rhs;
    let yy = rhs.norm_squared();

    let mut best: Option<(f64, usize)> = None;
    for lags in 0..=max_lag {
        let k = lags + 2;
        let g = gram.view((0, 0), (k, k)).into_owned();
        let c = cross.rows(0, k).into_owned();
        let Some(chol) = g.cholesky() else { continue };
        let b = chol.solve(&c);
        let rss = (yy - b.dot(&c)).max(f64::MIN_POSITIVE);
        let aic = nobs as f64 * (rss / nobs as f64).ln() + 2.0 * k as f64;
        if best.is_none_or(|(a, _)| aic < a) {
            best = Some((aic, lags));
        }
    }
    best.map(|(_, l)| l).ok_or(Error::RankDeficient)
}

pub fn adf_test(series: &[f64], cfg: &AdfConfig) -> Result<AdfResult> {
    let n = series.len();
    if let Some(v) = series.iter().find(|v| !v.is_finite()) {
        return Err(Error::NonFinite(format!("series value {v}")));
    }
    if n < 2 || series.iter().all(|&v| v == series[0]) {
        return Err(Error::InvalidData("constant series".into()));
    }
    let max_lag = match cfg.max_lag {
        Some(l) => l,
        None => auto_max_lag(n).min((n / 2).saturating_sub(3)),
    };
    if n < max_lag + 10 {
        return Err(Error::TooFewRows { n, min: max_lag + 10 });
    }
    let lags = match cfg.lag_rule {
        LagRule::Fixed => max_lag,
        LagRule::Aic => select_lag_aic(series, max_lag)?,
    };
    let nobs = n - lags - 1;
    let (x, rhs) = adf_design(series, lags, nobs);
    let fit = ols_solve(&x, &rhs)?;
    let statistic = fit.coefficients[0] / fit.std_errors[0];
    if !statistic.is_finite() {
        return Err(Error::NonFinite("ADF statistic".into()));
    }
    let critical_values = CRITICAL_VALUES
        .iter()
        .map(|&(k, v)| (k.to_owned(), v))
        .collect();
    let reject_at = CRITICAL_VALUES
        .iter()
        .filter(|&&(_, cv)| statistic < cv)
        .map(|&(k, _)| k.to_owned())
        .collect();
    Ok(AdfResult {
        statistic,
        lags_used: lags,
        n_effective: nobs,
        critical_values,
        reject_at,
        p_value: Some(mackinnon_p_value(statistic)),
    })
}

/// Approximate asymptotic p-value of the constant-only ADF statistic
/// (MacKinnon 1994 response surface, one integrated variable).
pub fn mackinnon_p_value(stat: f64) -> f64 {
    const TAU_MAX: f64 = 2.74;
    const TAU_MIN: f64 = -18.83;
    const TAU_STAR: f64 = -1.61;
    const SMALL_P: [f64; 3] = [2.1659, 1.4412, 3.8269e-2];
    const LARGE_P: [f64; 4] = [1.7339, 9.3202e-1, -1.2745e-1, -1.0368e-2];
    if stat > TAU_MAX {
        return 1.0;
    }
    if stat < TAU_MIN {
        return 0.0;
    }
    let coefs: &[f64] = if stat <= TAU_STAR { &SMALL_P } else { &LARGE_P };
    let z = coefs.iter().rev().fold(0.0, |acc, c| acc * stat + c);
    normal_cdf(z)
}

pub(crate) fn normal_cdf(z: f64) -> f64 {
    0.5 * statrs::function::erf::erfc(-z / std::f64::consts::SQRT_2)
}
