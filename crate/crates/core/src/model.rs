//! Fitted models: everything `predict` needs, in one JSON document.
//!
//! A model embeds its training data, the output standardisation, the
//! posterior-mean length scales and a thinned set of post-burn-in draws,
//! plus a SHA-256 fingerprint of the training data so a hand-edited or
//! truncated file is caught on load.

use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dataset::{read_csv, write_csv_to, Dataset, Schema};
use crate::error::{Error, Result};
use crate::evaluation::{Prediction, PredictionSet};
use crate::gp::{points, GpPosterior, JitterLadder, SqeKernel};
use crate::inference::{run_chain_with, ChainConfig, ChainData, ChainTrace, ModelKind, PosteriorSummary, TraceRow};

pub const FORMAT_VERSION: u32 = 1;

/// Upper bound on the number of draws kept for mixture prediction.
pub const MAX_DRAWS: usize = 200;

/// How hyperparameter uncertainty enters a prediction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PredictionMode {
    /// GP prediction at the posterior-mean length scales.
    PosteriorMean,
    /// Equal-weight mixture of GP predictions over the kept draws.
    Mixture,
}

impl PredictionMode {
    pub fn default_for(model: ModelKind) -> Self {
        match model {
            ModelKind::Stationary => PredictionMode::PosteriorMean,
            ModelKind::Nonstationary => PredictionMode::Mixture,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedModel {
    pub format_version: u32,
    pub model: ModelKind,
    pub prediction: PredictionMode,
    pub input_names: Vec<String>,
    pub output_name: String,
    pub train_x: Vec<Vec<f64>>,
    pub train_y: Vec<f64>,
    pub output_mean: f64,
    pub output_sd: f64,
    pub lengthscales: Vec<f64>,
    pub draws: Vec<Vec<f64>>,
    /// Length-scale proposal scales after burn-in adaptation.
    pub proposal_sd: Vec<f64>,
    pub jitter: f64,
    pub max_jitter: f64,
    pub chain: ChainConfig,
    pub summary: PosteriorSummary,
    pub fingerprint: String,
}

fn training_set(input_names: &[String], output_name: &str, x: &[Vec<f64>], y: &[f64]) -> Result<Dataset> {
    Dataset::new(
        x.to_vec(),
        y.iter().map(|v| vec![*v]).collect(),
        input_names.to_vec(),
        vec![output_name.to_string()],
        vec![1],
    )
}

/// Hex SHA-256 of the canonical CSV rendering of a dataset.
pub fn fingerprint(ds: &Dataset) -> Result<String> {
    let mut buf = Vec::new();
    write_csv_to(ds, &mut buf)?;
    Ok(Sha256::digest(&buf).iter().map(|b| format!("{b:02x}")).collect())
}

/// Evenly spaced subset of at most `MAX_DRAWS` post-burn-in rows.
fn thin(rows: &[TraceRow]) -> Vec<Vec<f64>> {
    let step = rows.len().div_ceil(MAX_DRAWS).max(1);
    rows.iter().step_by(step).map(|r| r.ell.clone()).collect()
}

/// Runs the chain on output `component` of `ds` and packages the result.
/// Every trace row is passed to `sink` as it is produced.
pub fn fit_model_with<F>(ds: &Dataset, component: usize, cfg: &ChainConfig, mut sink: F) -> Result<FittedModel>
where
    F: FnMut(&TraceRow) -> Result<()>,
{
    let data = ChainData::new(ds, component)?;
    let mut rows = Vec::with_capacity(cfg.n_iter);
    let proposal_sd = run_chain_with(cfg, &data, |r| {
        sink(r)?;
        if r.iter > cfg.n_burn {
            rows.push(r.clone());
        }
        Ok(())
    })?;
    let trace = ChainTrace { model: cfg.model, dim: data.dim(), n_burn: 0, rows };
    let summary = crate::inference::summarize(&trace)?;
    let so = &data.standardization;
    let output_name = ds.output_names()[component].clone();
    let train_y = ds.output_column(component);
    let mut m = FittedModel {
        format_version: FORMAT_VERSION,
        model: cfg.model,
        prediction: PredictionMode::default_for(cfg.model),
        input_names: ds.input_names().to_vec(),
        output_name,
        train_x: ds.input_rows(),
        train_y,
        output_mean: so.mean()[component],
        output_sd: so.sd()[component],
        lengthscales: summary.ell_means(),
        draws: thin(&trace.rows),
        proposal_sd,
        jitter: cfg.jitter,
        max_jitter: cfg.max_jitter,
        chain: cfg.clone(),
        summary,
        fingerprint: String::new(),
    };
    m.fingerprint = fingerprint(&training_set(&m.input_names, &m.output_name, &m.train_x, &m.train_y)?)?;
    Ok(m)
}

pub fn fit_model(ds: &Dataset, component: usize, cfg: &ChainConfig) -> Result<FittedModel> {
    fit_model_with(ds, component, cfg, |_| Ok(()))
}

/// Test inputs with optional true outputs.
#[derive(Debug, Clone, PartialEq)]
pub struct TestData {
    pub x: Vec<Vec<f64>>,
    pub truth: Option<Vec<f64>>,
}

impl TestData {
    pub fn from_dataset(ds: &Dataset, component: usize) -> Self {
        TestData { x: ds.input_rows(), truth: Some(ds.output_column(component)) }
    }
}

/// Reads the model's input columns and, when present, its output column.
pub fn read_test_data<R: io::Read>(mut reader: R, input_names: &[String], output_name: &str) -> Result<TestData> {
    let mut text = Vec::new();
    reader.read_to_end(&mut text).map_err(|e| Error::io("<test data>", e))?;
    let has_truth = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_slice())
        .headers()?
        .iter()
        .any(|h| h == output_name);
    if has_truth {
        let ds = read_csv(text.as_slice(), &Schema::new(input_names, [output_name]))?;
        Ok(TestData::from_dataset(&ds, 0))
    } else {
        // no output column: reuse an input column as a placeholder output
        let first = input_names.first().ok_or_else(|| Error::InvalidData("model has no inputs".into()))?;
        let ds = read_csv(text.as_slice(), &Schema::new(input_names, [first]))?;
        Ok(TestData { x: ds.input_rows(), truth: None })
    }
}

impl FittedModel {
    pub fn ladder(&self) -> JitterLadder {
        JitterLadder { start: self.jitter, max: self.max_jitter, factor: 10.0 }
    }

    pub fn dim(&self) -> usize {
        self.input_names.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.format_version != FORMAT_VERSION {
            return Err(Error::InvalidData(format!(
                "model format {} (expected {FORMAT_VERSION})",
                self.format_version
            )));
        }
        let ds = training_set(&self.input_names, &self.output_name, &self.train_x, &self.train_y)?;
        if fingerprint(&ds)? != self.fingerprint {
            return Err(Error::InvalidData("model training data does not match its fingerprint".into()));
        }
        if self.lengthscales.len() != self.dim() || self.draws.iter().any(|d| d.len() != self.dim()) {
            return Err(Error::InvalidData("length-scale vectors do not match the input dimension".into()));
        }
        if !(self.output_sd > 0.0) {
            return Err(Error::InvalidData("output sd must be positive".into()));
        }
        if self.prediction == PredictionMode::Mixture && self.draws.is_empty() {
            return Err(Error::InvalidData("mixture prediction needs posterior draws".into()));
        }
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let m: FittedModel = serde_json::from_str(&text)?;
        m.validate()?;
        Ok(m)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        crate::report::write_json(path, self)
    }

    /// Short description for reports.
    pub fn descriptor(&self) -> serde_json::Value {
        serde_json::json!({
            "kind": self.model.as_str(),
            "prediction": self.prediction,
            "lengthscales": self.lengthscales,
            "n_train": self.train_y.len(),
            "fingerprint": self.fingerprint,
        })
    }

    fn standardized_y(&self) -> Vec<f64> {
        self.train_y.iter().map(|y| (y - self.output_mean) / self.output_sd).collect()
    }

    /// Predictive means and sds in original output units.
    pub fn predict(&self, x_test: &[Vec<f64>]) -> Result<Vec<(f64, f64)>> {
        if let Some(bad) = x_test.iter().find(|x| x.len() != self.dim()) {
            return Err(Error::InvalidData(format!(
                "test input has {} components, model expects {}",
                bad.len(),
                self.dim()
            )));
        }
        let x = points(&self.train_x);
        let y = self.standardized_y();
        let ladder = self.ladder();
        let sets: Vec<&[f64]> = match self.prediction {
            PredictionMode::PosteriorMean => vec![&self.lengthscales],
            PredictionMode::Mixture => self.draws.iter().map(Vec::as_slice).collect(),
        };
        let mut first = vec![0.0; x_test.len()];
        let mut second = vec![0.0; x_test.len()];
        for ell in &sets {
            let post = GpPosterior::fit(&x, &y, SqeKernel::new(ell.to_vec())?, &ladder)?;
            for (i, xt) in x_test.iter().enumerate() {
                let p = post.predict(xt)?;
                first[i] += p.mean;
                second[i] += p.variance + p.mean * p.mean;
            }
        }
        let k = sets.len() as f64;
        Ok(first
            .iter()
            .zip(&second)
            .map(|(s1, s2)| {
                let mean = s1 / k;
                let var = (s2 / k - mean * mean).max(0.0);
                (self.output_mean + self.output_sd * mean, self.output_sd * var.sqrt())
            })
            .collect())
    }

    pub fn predict_set(&self, test: &TestData) -> Result<PredictionSet> {
        let preds = self.predict(&test.x)?;
        let rows = preds
            .into_iter()
            .enumerate()
            .map(|(i, (mean, sd))| Prediction {
                index: i + 1,
                x: test.x[i].clone(),
                truth: test.truth.as_ref().map(|t| t[i]),
                mean,
                sd,
            })
            .collect();
        PredictionSet::new(self.input_names.clone(), rows)
    }
}
