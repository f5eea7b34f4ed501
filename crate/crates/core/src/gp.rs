//! Zero-mean Gaussian-process regression on standardised outputs with a
//! squared-exponential correlation kernel `exp(-Σ_m (x_m - x'_m)² / ℓ_m)`.
//!
//! The kernel is a correlation function (unit diagonal), so the prior
//! variance of every output is 1 plus whatever jitter the factorisation
//! needed.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::dataset::StandardizedOutputs;
use crate::error::{Error, Result};

const LN_2PI: f64 = 1.837_877_066_409_345_5;

#[derive(Debug, Clone, PartialEq)]
pub struct SqeKernel {
    lengthscales: Vec<f64>,
}

impl SqeKernel {
    pub fn new(lengthscales: Vec<f64>) -> Result<Self> {
        if lengthscales.is_empty() {
            return Err(Error::Precondition("kernel needs at least one length scale".into()));
        }
        if let Some(l) = lengthscales.iter().find(|l| !(l.is_finite() && **l > 0.0)) {
            return Err(Error::Precondition(format!("length scale {l} must be positive and finite")));
        }
        Ok(SqeKernel { lengthscales })
    }

    pub fn lengthscales(&self) -> &[f64] {
        &self.lengthscales
    }

    pub fn dim(&self) -> usize {
        self.lengthscales.len()
    }

    fn corr_unchecked(&self, a: &[f64], b: &[f64]) -> f64 {
        let s: f64 = a
            .iter()
            .zip(b)
            .zip(&self.lengthscales)
            .map(|((x, y), l)| (x - y) * (x - y) / l)
            .sum();
        (-s).exp()
    }
}

pub fn sqe_corr(a: &[f64], b: &[f64], k: &SqeKernel) -> Result<f64> {
    if a.len() != k.dim() || b.len() != k.dim() {
        return Err(Error::Precondition(format!(
            "input dimensions {} and {} for a {}-dimensional kernel",
            a.len(),
            b.len(),
            k.dim()
        )));
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("kernel input".into()));
    }
    Ok(k.corr_unchecked(a, b))
}

/// Training inputs as an `N x d` matrix, one point per row.
pub fn points(rows: &[Vec<f64>]) -> DMatrix<f64> {
    let d = rows.first().map_or(0, Vec::len);
    DMatrix::from_fn(rows.len(), d, |i, m| rows[i][m])
}

fn row(x: &DMatrix<f64>, i: usize) -> Vec<f64> {
    x.row(i).iter().copied().collect()
}

/// `[K(x_i, x_j)] + jitter·I`.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrMatrix {
    pub entries: DMatrix<f64>,
    pub jitter: f64,
}

impl CorrMatrix {
    pub fn len(&self) -> usize {
        self.entries.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Cholesky factor at the current jitter, without escalation.
    pub fn cholesky(&self) -> Result<FactoredCorr> {
        Cholesky::new(self.entries.clone())
            .map(|chol| FactoredCorr { chol, jitter: self.jitter })
            .ok_or(Error::NotPositiveDefinite { jitter: self.jitter })
    }
}

pub fn corr_matrix(x: &DMatrix<f64>, k: &SqeKernel, jitter: f64) -> Result<CorrMatrix> {
    if x.ncols() != k.dim() {
        return Err(Error::Precondition(format!(
            "{}-dimensional inputs for a {}-dimensional kernel",
            x.ncols(),
            k.dim()
        )));
    }
    if !(jitter >= 0.0) {
        return Err(Error::Precondition("jitter must be >= 0".into()));
    }
    Ok(PairwiseSqDiffs::new(x).corr_matrix(k, jitter))
}

/// Per-dimension squared differences of every input pair, so repeated
/// matrix assembly for new length scales skips the subtraction.
#[derive(Debug, Clone)]
pub struct PairwiseSqDiffs {
    n: usize,
    d: usize,
    diffs: Vec<f64>,
}

impl PairwiseSqDiffs {
    pub fn new(x: &DMatrix<f64>) -> Self {
        let (n, d) = x.shape();
        let mut diffs = Vec::with_capacity(n * n.saturating_sub(1) / 2 * d);
        for j in 0..n {
            for i in 0..j {
                for m in 0..d {
                    let v = x[(i, m)] - x[(j, m)];
                    diffs.push(v * v);
                }
            }
        }
        PairwiseSqDiffs { n, d, diffs }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Number of distinct off-diagonal pairs, `N(N-1)/2`.
    pub fn pair_count(&self) -> usize {
        self.diffs.len() / self.d.max(1)
    }

    pub fn corr_matrix(&self, k: &SqeKernel, jitter: f64) -> CorrMatrix {
        let inv: Vec<f64> = k.lengthscales.iter().map(|l| 1.0 / l).collect();
        let mut m = DMatrix::from_element(self.n, self.n, 1.0 + jitter);
        let mut chunks = self.diffs.chunks_exact(self.d.max(1));
        for j in 0..self.n {
            for i in 0..j {
                let c = chunks.next().expect("pair count");
                let s: f64 = c.iter().zip(&inv).map(|(a, b)| a * b).sum();
                let v = (-s).exp();
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        CorrMatrix { entries: m, jitter }
    }

    /// Factor with the smallest ladder jitter that makes the matrix PD.
    pub fn factor(&self, k: &SqeKernel, ladder: &JitterLadder) -> Result<FactoredCorr> {
        let base = self.corr_matrix(k, 0.0);
        ladder.factor(&base.entries)
    }
}

/// Jitter escalation: `start`, `start·factor`, ... up to `max`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JitterLadder {
    pub start: f64,
    pub max: f64,
    pub factor: f64,
}

impl Default for JitterLadder {
    fn default() -> Self {
        JitterLadder { start: 1e-8, max: 1e-4, factor: 10.0 }
    }
}

impl JitterLadder {
    /// Single rung at `jitter`.
    pub fn fixed(jitter: f64) -> Self {
        JitterLadder { start: jitter, max: jitter, factor: 10.0 }
    }

    fn rungs(&self) -> impl Iterator<Item = f64> + '_ {
        std::iter::successors(Some(self.start), move |j| {
            let next = j * self.factor;
            (next <= self.max * (1.0 + 1e-9) && next > *j).then_some(next)
        })
    }

    /// Factor `base + jitter·I` (base given with a zero-jitter diagonal).
    pub fn factor(&self, base: &DMatrix<f64>) -> Result<FactoredCorr> {
        let mut last = self.start;
        for jitter in self.rungs() {
            last = jitter;
            let mut m = base.clone();
            for i in 0..m.nrows() {
                m[(i, i)] += jitter;
            }
            if let Some(chol) = Cholesky::new(m) {
                return Ok(FactoredCorr { chol, jitter });
            }
        }
        Err(Error::NotPositiveDefinite { jitter: last })
    }
}

#[derive(Debug, Clone)]
pub struct FactoredCorr {
    chol: Cholesky<f64, Dyn>,
    jitter: f64,
}

impl FactoredCorr {
    pub fn len(&self) -> usize {
        self.chol.l_dirty().nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    pub fn log_det(&self) -> f64 {
        let l = self.chol.l_dirty();
        2.0 * (0..l.nrows()).map(|i| l[(i, i)].ln()).sum::<f64>()
    }

    pub fn solve(&self, b: &DVector<f64>) -> DVector<f64> {
        self.chol.solve(b)
    }

    /// `L z` for the lower Cholesky factor `L`.
    pub fn lower_times(&self, z: &[f64]) -> Vec<f64> {
        (self.chol.l() * DVector::from_row_slice(z)).iter().copied().collect()
    }

    /// `bᵀ Σ⁻¹ b` through one triangular solve.
    pub fn quad_form(&self, b: &DVector<f64>) -> f64 {
        let l = self.chol.l();
        l.solve_lower_triangular(b)
            .map_or(f64::NAN, |z| z.norm_squared())
    }
}

/// Zero-mean multivariate-normal log density of `y` under the factored
/// correlation matrix.
pub fn log_likelihood(chol: &FactoredCorr, y: &[f64]) -> Result<f64> {
    if y.len() != chol.len() {
        return Err(Error::Precondition(format!(
            "response of length {} for a {}x{} matrix",
            y.len(),
            chol.len(),
            chol.len()
        )));
    }
    let v = DVector::from_row_slice(y);
    let ll = -0.5 * (y.len() as f64 * LN_2PI + chol.log_det() + chol.quad_form(&v));
    if ll.is_finite() {
        Ok(ll)
    } else {
        Err(Error::NonFinite("log-likelihood".into()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GpPrediction {
    pub mean: f64,
    pub variance: f64,
}

impl GpPrediction {
    /// Back to original output units.
    pub fn unstandardize(self, so: &StandardizedOutputs, component: usize) -> GpPrediction {
        GpPrediction {
            mean: so.unstandardize(self.mean, component),
            variance: so.unstandardize_variance(self.variance, component),
        }
    }

    pub fn sd(&self) -> f64 {
        self.variance.sqrt()
    }
}

/// Conditioned GP ready to predict at new inputs.
#[derive(Debug, Clone)]
pub struct GpPosterior {
    x: DMatrix<f64>,
    kernel: SqeKernel,
    factor: FactoredCorr,
    alpha: DVector<f64>,
}

impl GpPosterior {
    pub fn fit(x: &DMatrix<f64>, y: &[f64], kernel: SqeKernel, ladder: &JitterLadder) -> Result<Self> {
        if y.len() != x.nrows() {
            return Err(Error::Precondition("one response per training input".into()));
        }
        if x.ncols() != kernel.dim() {
            return Err(Error::Precondition("input dimension does not match kernel".into()));
        }
        let factor = PairwiseSqDiffs::new(x).factor(&kernel, ladder)?;
        let alpha = factor.solve(&DVector::from_row_slice(y));
        Ok(GpPosterior { x: x.clone(), kernel, factor, alpha })
    }

    pub fn jitter(&self) -> f64 {
        self.factor.jitter
    }

    pub fn kernel(&self) -> &SqeKernel {
        &self.kernel
    }

    pub fn predict(&self, x_test: &[f64]) -> Result<GpPrediction> {
        if x_test.len() != self.kernel.dim() {
            return Err(Error::Precondition("test input dimension does not match kernel".into()));
        }
        let kv = DVector::from_iterator(
            self.x.nrows(),
            (0..self.x.nrows()).map(|i| self.kernel.corr_unchecked(&row(&self.x, i), x_test)),
        );
        let mean = kv.dot(&self.alpha);
        let mut variance = 1.0 + self.factor.jitter - self.factor.quad_form(&kv);
        if variance < 0.0 {
            if variance < -1e-10 {
                return Err(Error::NonFinite(format!("negative predictive variance {variance:e}")));
            }
            variance = 0.0;
        }
        Ok(GpPrediction { mean, variance })
    }
}

/// Predictive mean and variance at one test input (standardised units).
pub fn gp_predict(
    x_train: &DMatrix<f64>,
    y_train: &[f64],
    kernel: &SqeKernel,
    ladder: &JitterLadder,
    x_test: &[f64],
) -> Result<GpPrediction> {
    GpPosterior::fit(x_train, y_train, kernel.clone(), ladder)?.predict(x_test)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn k(ls: &[f64]) -> SqeKernel {
        SqeKernel::new(ls.to_vec()).unwrap()
    }

    #[test]
    fn sqe_values() {
        assert_eq!(sqe_corr(&[0.3, 2.0], &[0.3, 2.0], &k(&[1.0, 2.0])).unwrap(), 1.0);
        assert!((sqe_corr(&[0.0], &[1.0], &k(&[1.0])).unwrap() - (-1.0f64).exp()).abs() < 1e-16);
        let a = [0.2, -1.0];
        let b = [1.4, 0.5];
        let kk = k(&[0.7, 3.0]);
        assert_eq!(sqe_corr(&a, &b, &kk).unwrap(), sqe_corr(&b, &a, &kk).unwrap());
        assert!(sqe_corr(&[0.0], &[1.0, 2.0], &kk).is_err());
        assert!(sqe_corr(&[f64::NAN, 0.0], &[1.0, 2.0], &kk).is_err());
        assert!(SqeKernel::new(vec![1.0, 0.0]).is_err());
    }

    #[test]
    fn single_point_matrix() {
        let cm = corr_matrix(&points(&[vec![1.0]]), &k(&[1.0]), 1e-8).unwrap();
        assert_eq!(cm.entries[(0, 0)], 1.0 + 1e-8);
    }

    #[test]
    fn duplicate_inputs_need_jitter() {
        let x = points(&[vec![0.5], vec![0.5]]);
        let singular = corr_matrix(&x, &k(&[1.0]), 0.0).unwrap();
        assert!(matches!(singular.cholesky(), Err(Error::NotPositiveDefinite { .. })));
        let jittered = corr_matrix(&x, &k(&[1.0]), 1e-8).unwrap();
        assert!(jittered.cholesky().is_ok());
        let f = PairwiseSqDiffs::new(&x).factor(&k(&[1.0]), &JitterLadder::default()).unwrap();
        assert_eq!(f.jitter(), 1e-8);
    }

    #[test]
    fn ladder_escalates_then_gives_up() {
        let ladder = JitterLadder::default();
        let rungs: Vec<f64> = ladder.rungs().collect();
        assert_eq!(rungs.len(), 5);
        assert!((rungs[4] - 1e-4).abs() < 1e-18);
        let bad = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(matches!(ladder.factor(&bad), Err(Error::NotPositiveDefinite { .. })));
    }

    #[test]
    fn pair_count_for_two_hundred_points() {
        let rows: Vec<Vec<f64>> = (0..200).map(|i| vec![i as f64, 0.0, 1.0, 2.0]).collect();
        assert_eq!(PairwiseSqDiffs::new(&points(&rows)).pair_count(), 19900);
    }

    #[test]
    fn standard_normal_at_zero() {
        let f = corr_matrix(&points(&[vec![0.0]]), &k(&[1.0]), 0.0).unwrap().cholesky().unwrap();
        let ll = log_likelihood(&f, &[0.0]).unwrap();
        assert!((ll + 0.918_938_533_204_672_7).abs() < 1e-12);
    }

    #[test]
    fn identity_covariance() {
        let x = points(&[vec![0.0], vec![100.0], vec![200.0]]);
        let f = corr_matrix(&x, &k(&[1.0]), 0.0).unwrap().cholesky().unwrap();
        let y = [0.5, -1.0, 2.0];
        let expect = -1.5 * LN_2PI - 0.5 * (0.25 + 1.0 + 4.0);
        assert!((log_likelihood(&f, &y).unwrap() - expect).abs() < 1e-12);
    }

    #[test]
    fn bivariate_closed_form() {
        // choose the distance so that corr = 0.5
        let dx = (2f64.ln()).sqrt();
        let x = points(&[vec![0.0], vec![dx]]);
        let f = corr_matrix(&x, &k(&[1.0]), 0.0).unwrap().cholesky().unwrap();
        let rho: f64 = 0.5;
        let det = 1.0 - rho * rho;
        // (1,1) Σ⁻¹ (1,1)ᵀ = (1 - 2ρ + 1) / det
        let quad = (2.0 - 2.0 * rho) / det;
        let expect = -0.5 * (2.0 * LN_2PI + det.ln() + quad);
        assert!((log_likelihood(&f, &[1.0, 1.0]).unwrap() - expect).abs() < 1e-12);
    }

    #[test]
    fn interpolates_training_points() {
        let x = points(&[vec![0.0], vec![0.7], vec![1.9]]);
        let y = [0.3, -1.2, 0.8];
        let post = GpPosterior::fit(&x, &y, k(&[0.5]), &JitterLadder::fixed(0.0)).unwrap();
        let p = post.predict(&[0.7]).unwrap();
        assert!((p.mean + 1.2).abs() < 1e-10);
        assert!(p.variance.abs() < 1e-10);
    }

    #[test]
    fn reverts_to_prior_far_away() {
        let x = points(&[vec![0.0], vec![0.5]]);
        let p = gp_predict(&x, &[1.0, 2.0], &k(&[0.1]), &JitterLadder::default(), &[1e3]).unwrap();
        assert!(p.mean.abs() < 1e-12);
        assert!((p.variance - 1.0 - 1e-8).abs() < 1e-12);
    }

    #[test]
    fn unstandardize_prediction() {
        let ds = crate::dataset::Dataset::series(vec![10.0, 14.0, 18.0]).unwrap();
        let so = crate::dataset::standardize(&ds).unwrap();
        let p = GpPrediction { mean: 0.5, variance: 0.25 }.unstandardize(&so, 0);
        assert_eq!(p.mean, 16.0);
        assert_eq!(p.variance, 4.0);
    }
}
