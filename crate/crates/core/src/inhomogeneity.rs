//! The inhomogeneity parameter `p_D` of a dataset.
//!
//! Consecutive outputs are compared through the log-correlation distance
//! `d(Y_i, Y_j) = sqrt(-ln |corr(Y_i, Y_j)|)`. The resulting `N - 1`
//! L-values each carry a closed tolerance band; an index is *incompatible*
//! when its band meets no other band, and `p_D` is the incompatible fraction
//! `m / (N - 1)`.
//!
//! A single pair of realisations carries no correlation on its own, so the
//! correlation is estimated either from a local window of lag-1 pairs
//! (scalar outputs) or across the components of two tensor outputs.

use serde::{Deserialize, Serialize};

use crate::dataset::{standardize, Dataset, StandardizedOutputs};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorKind {
    /// Pearson correlation of the lag-1 pairs `(y_c, y_{c+1})` for `c` within
    /// `half_width` of `i`. Scalar outputs only.
    #[serde(alias = "windowed-pairs")]
    Windowed,
    /// Pearson correlation across the `P >= 3` components of `y_i` and `y_j`.
    #[serde(alias = "elementwise-tensor")]
    Tensor,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CorrEstimatorConfig {
    pub kind: EstimatorKind,
    pub half_width: usize,
    /// Lower clamp on `|corr|` so the log stays finite.
    pub corr_floor: f64,
}

impl Default for CorrEstimatorConfig {
    fn default() -> Self {
        CorrEstimatorConfig {
            kind: EstimatorKind::Windowed,
            half_width: 5,
            corr_floor: 1e-12,
        }
    }
}

impl CorrEstimatorConfig {
    pub fn tensor() -> Self {
        CorrEstimatorConfig {
            kind: EstimatorKind::Tensor,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.half_width < 1 {
            return Err(Error::Config("half_width must be >= 1".into()));
        }
        if !(self.corr_floor > 0.0 && self.corr_floor < 1.0) {
            return Err(Error::Config("corr_floor must lie in (0, 1)".into()));
        }
        Ok(())
    }
}

/// Half-width `δ_i` of the tolerance band around each L-value.
#[derive(Debug, Clone, PartialEq)]
pub enum Tolerance {
    /// Same `δ` for every index.
    Constant(f64),
    /// `δ_i = β · L_i` with `0 < β < 1`.
    Proportional(f64),
    /// Caller-supplied `δ_i`, one per L-value.
    PerIndex(Vec<f64>),
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance::Constant(0.05)
    }
}

impl Tolerance {
    pub fn validate(&self) -> Result<()> {
        match self {
            Tolerance::Constant(d) if !(*d >= 0.0 && d.is_finite()) => {
                Err(Error::Config(format!("delta must be >= 0, got {d}")))
            }
            Tolerance::Proportional(b) if !(*b > 0.0 && *b < 1.0) => {
                Err(Error::Config(format!("beta must lie in (0, 1), got {b}")))
            }
            Tolerance::PerIndex(ds) if ds.iter().any(|d| !(*d >= 0.0 && d.is_finite())) => {
                Err(Error::Config("per-index deltas must be finite and >= 0".into()))
            }
            _ => Ok(()),
        }
    }

    fn half_width(&self, index: usize, l: f64) -> f64 {
        match self {
            Tolerance::Constant(d) => *d,
            Tolerance::Proportional(b) => b * l,
            Tolerance::PerIndex(ds) => ds[index],
        }
    }

    pub fn summary(&self) -> ToleranceSummary {
        match self {
            Tolerance::Constant(d) => ToleranceSummary {
                mode: "constant".into(),
                delta: Some(*d),
                beta: None,
                max_delta: None,
            },
            Tolerance::Proportional(b) => ToleranceSummary {
                mode: "proportional".into(),
                delta: None,
                beta: Some(*b),
                max_delta: None,
            },
            Tolerance::PerIndex(ds) => ToleranceSummary {
                mode: "per_index".into(),
                delta: None,
                beta: None,
                max_delta: Some(ds.iter().copied().fold(0.0, f64::max)),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToleranceSummary {
    pub mode: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_delta: Option<f64>,
}

/// Closed interval `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Band {
    pub lo: f64,
    pub hi: f64,
}

impl Band {
    pub fn contains(&self, v: f64) -> bool {
        self.lo <= v && v <= self.hi
    }

    /// Closed intervals: touching endpoints intersect.
    pub fn intersects(&self, other: &Band) -> bool {
        self.lo <= other.hi && other.lo <= self.hi
    }
}

/// `L_1 ... L_{N-1}` with their bands. Position `k` (0-based) holds `L_{k+1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct LSeries {
    pub values: Vec<f64>,
    pub bands: Vec<Band>,
    /// Clamped `|corr|` behind each value; empty when built from raw L-values.
    pub corr_values: Vec<f64>,
    pub tolerance: Tolerance,
}

impl LSeries {
    /// Bands around precomputed L-values.
    pub fn from_values(values: Vec<f64>, tolerance: Tolerance) -> Result<Self> {
        tolerance.validate()?;
        if let Tolerance::PerIndex(ds) = &tolerance {
            if ds.len() != values.len() {
                return Err(Error::Config(format!(
                    "{} per-index deltas for {} L-values",
                    ds.len(),
                    values.len()
                )));
            }
        }
        if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::NonFinite(format!("L-value {v}")));
        }
        let bands = values
            .iter()
            .enumerate()
            .map(|(k, &l)| {
                let d = tolerance.half_width(k, l);
                Band { lo: l - d, hi: l + d }
            })
            .collect();
        Ok(LSeries {
            values,
            bands,
            corr_values: Vec::new(),
            tolerance,
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Pearson correlation, `None` when either coordinate is constant.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Option<f64> {
    debug_assert_eq!(xs.len(), ys.len());
    let constant = |v: &[f64]| v.iter().all(|&a| a == v[0]);
    if xs.len() < 2 || constant(xs) || constant(ys) {
        return None;
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some(sxy / (sxx.sqrt() * syy.sqrt()))
}

/// Estimated `|corr(Y_i, Y_j)|` for 1-based indices, clamped into `[floor, 1]`.
pub fn abs_corr(
    outputs: &StandardizedOutputs,
    i: usize,
    j: usize,
    cfg: &CorrEstimatorConfig,
) -> Result<f64> {
    let n = outputs.len();
    if i < 1 || j < 1 || i > n || j > n {
        return Err(Error::Precondition(format!(
            "indices ({i}, {j}) outside 1..={n}"
        )));
    }
    let r = match cfg.kind {
        EstimatorKind::Windowed => {
            if outputs.components() != 1 {
                return Err(Error::Precondition(
                    "windowed estimator needs scalar outputs".into(),
                ));
            }
            if j != i + 1 {
                return Err(Error::Precondition(
                    "windowed estimator compares consecutive indices only".into(),
                ));
            }
            let lo = i.saturating_sub(cfg.half_width).max(1);
            let hi = (i + cfg.half_width).min(n - 1);
            let xs: Vec<f64> = (lo..=hi).map(|c| outputs.value(c - 1, 0)).collect();
            let ys: Vec<f64> = (lo..=hi).map(|c| outputs.value(c, 0)).collect();
            pearson(&xs, &ys)
        }
        EstimatorKind::Tensor => {
            if outputs.components() < 3 {
                return Err(Error::Precondition(
                    "tensor estimator needs at least 3 output components".into(),
                ));
            }
            pearson(outputs.row(i - 1), outputs.row(j - 1))
        }
    }
    .ok_or(Error::DegenerateWindow { index: i })?;
    Ok(r.abs().clamp(cfg.corr_floor, 1.0))
}

/// `sqrt(-ln corr)` for `corr` in `(0, 1]`.
pub fn d_y(corr: f64) -> f64 {
    debug_assert!(corr > 0.0 && corr <= 1.0, "corr {corr} outside (0, 1]");
    let v = -corr.ln();
    if v <= 0.0 {
        0.0
    } else {
        v.sqrt()
    }
}

pub fn l_series(
    outputs: &StandardizedOutputs,
    cfg: &CorrEstimatorConfig,
    tolerance: Tolerance,
) -> Result<LSeries> {
    cfg.validate()?;
    let n = outputs.len();
    if n < 2 {
        return Err(Error::TooFewRows { n, min: 2 });
    }
    let corr_values = (1..n)
        .map(|i| abs_corr(outputs, i, i + 1, cfg))
        .collect::<Result<Vec<_>>>()?;
    let values = corr_values.iter().map(|&c| d_y(c)).collect();
    let mut ls = LSeries::from_values(values, tolerance)?;
    ls.corr_values = corr_values;
    Ok(ls)
}

fn check_len(ls: &LSeries) -> Result<()> {
    if ls.len() < 2 {
        Err(Error::TooFewLValues(ls.len()))
    } else {
        Ok(())
    }
}

/// 1-based indices whose band intersects no other band, ascending.
///
/// Bands are swept in order of lower endpoint: a band meets an earlier one
/// iff the running maximum of earlier upper endpoints reaches its lower
/// endpoint, and meets a later one iff the next lower endpoint is within
/// its upper endpoint.
pub fn incompatible_set(ls: &LSeries) -> Result<Vec<usize>> {
    check_len(ls)?;
    let bands = &ls.bands;
    let mut order: Vec<usize> = (0..bands.len()).collect();
    order.sort_by(|&a, &b| {
        bands[a]
            .lo
            .total_cmp(&bands[b].lo)
            .then(bands[a].hi.total_cmp(&bands[b].hi))
    });
    let mut isolated = Vec::new();
    let mut max_hi = f64::NEG_INFINITY;
    for (k, &idx) in order.iter().enumerate() {
        let band = bands[idx];
        let meets_earlier = k > 0 && max_hi >= band.lo;
        let meets_later = order.get(k + 1).is_some_and(|&next| bands[next].lo <= band.hi);
        if !meets_earlier && !meets_later {
            isolated.push(idx + 1);
        }
        max_hi = max_hi.max(band.hi);
    }
    isolated.sort_unstable();
    Ok(isolated)
}

/// Exhaustive pairwise version of [`incompatible_set`].
pub fn brute_force_incompatible(ls: &LSeries) -> Result<Vec<usize>> {
    check_len(ls)?;
    let bands = &ls.bands;
    Ok((0..bands.len())
        .filter(|&l| {
            (0..bands.len())
                .filter(|&i| i != l)
                .all(|i| !bands[l].intersects(&bands[i]))
        })
        .map(|l| l + 1)
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InhomReport {
    /// Dataset size `N`.
    pub n: usize,
    /// Number of incompatible L-values.
    pub m: usize,
    /// `m / (N - 1)`.
    pub p: f64,
    /// 1-based indices of incompatible L-values.
    pub incompatible_indices: Vec<usize>,
    pub config: ReportConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub estimator: Option<CorrEstimatorConfig>,
    pub tolerance: ToleranceSummary,
}

pub fn inhomogeneity_parameter(ls: &LSeries) -> Result<InhomReport> {
    let incompatible = incompatible_set(ls)?;
    let m = incompatible.len();
    Ok(InhomReport {
        n: ls.len() + 1,
        m,
        p: m as f64 / ls.len() as f64,
        incompatible_indices: incompatible,
        config: ReportConfig {
            estimator: None,
            tolerance: ls.tolerance.summary(),
        },
    })
}

/// Standardise, build the L-series and report `p_D` in one go.
pub fn inhomogeneity_of(
    ds: &Dataset,
    cfg: &CorrEstimatorConfig,
    tolerance: Tolerance,
) -> Result<(LSeries, InhomReport)> {
    let so = standardize(ds)?;
    let ls = l_series(&so, cfg, tolerance)?;
    let mut report = inhomogeneity_parameter(&ls)?;
    report.config.estimator = Some(*cfg);
    Ok((ls, report))
}

/// Writes `index,L,band_lo,band_hi,incompatible` rows.
pub fn write_lvalues<W: std::io::Write>(ls: &LSeries, incompatible: &[usize], writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(["index", "L", "band_lo", "band_hi", "incompatible"])?;
    let mut flags = vec![false; ls.len()];
    for &i in incompatible {
        flags[i - 1] = true;
    }
    for (k, (l, b)) in ls.values.iter().zip(&ls.bands).enumerate() {
        wtr.write_record([
            (k + 1).to_string(),
            l.to_string(),
            b.lo.to_string(),
            b.hi.to_string(),
            u8::from(flags[k]).to_string(),
        ])?;
    }
    wtr.flush().map_err(|e| Error::io("<lvalues writer>", e))?;
    Ok(())
}
