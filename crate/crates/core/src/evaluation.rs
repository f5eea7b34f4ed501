//! Predictive scoring: RMSE and the compatibility parameter `C`, the
//! fraction of truths inside `[mean - sd, mean + sd]`.

use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::report::write_json;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    /// 1-based position in the test set.
    pub index: usize,
    pub x: Vec<f64>,
    pub truth: Option<f64>,
    pub mean: f64,
    pub sd: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PredictionSet {
    pub input_names: Vec<String>,
    pub rows: Vec<Prediction>,
}

impl PredictionSet {
    pub fn new(input_names: Vec<String>, rows: Vec<Prediction>) -> Result<Self> {
        let ps = PredictionSet { input_names, rows };
        ps.validate()?;
        Ok(ps)
    }

    /// Builds a set from parallel columns; `x` may be empty.
    pub fn from_columns(truth: &[f64], mean: &[f64], sd: &[f64]) -> Result<Self> {
        if truth.len() != mean.len() || mean.len() != sd.len() {
            return Err(Error::InvalidData("truth, mean and sd lengths differ".into()));
        }
        let rows = (0..mean.len())
            .map(|i| Prediction { index: i + 1, x: Vec::new(), truth: Some(truth[i]), mean: mean[i], sd: sd[i] })
            .collect();
        Self::new(Vec::new(), rows)
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        for r in &self.rows {
            if r.x.len() != self.input_names.len() {
                return Err(Error::InvalidData(format!(
                    "prediction {} has {} inputs, expected {}",
                    r.index,
                    r.x.len(),
                    self.input_names.len()
                )));
            }
            if !(r.sd >= 0.0) || !r.mean.is_finite() || !r.sd.is_finite() {
                return Err(Error::InvalidData(format!(
                    "prediction {}: mean {} sd {}",
                    r.index, r.mean, r.sd
                )));
            }
        }
        Ok(())
    }

    fn scored(&self) -> Result<Vec<(f64, &Prediction)>> {
        if self.rows.is_empty() {
            return Err(Error::InvalidData("empty prediction set".into()));
        }
        self.rows
            .iter()
            .map(|r| {
                r.truth
                    .map(|t| (t, r))
                    .ok_or_else(|| Error::InvalidData(format!("prediction {} has no true value", r.index)))
            })
            .collect()
    }
}

pub fn rmse(ps: &PredictionSet) -> Result<f64> {
    let s = ps.scored()?;
    let sse: f64 = s.iter().map(|(t, r)| (t - r.mean).powi(2)).sum();
    Ok((sse / s.len() as f64).sqrt())
}

/// Closed-interval membership: a truth exactly at `mean ± sd` counts.
pub fn compatibility(ps: &PredictionSet) -> Result<f64> {
    let s = ps.scored()?;
    let inside = s
        .iter()
        .filter(|(t, r)| r.mean - r.sd <= *t && *t <= r.mean + r.sd)
        .count();
    Ok(inside as f64 / s.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub rmse: f64,
    #[serde(rename = "C")]
    pub compatibility: f64,
    pub n_test: usize,
}

pub fn metrics(ps: &PredictionSet) -> Result<Metrics> {
    Ok(Metrics { rmse: rmse(ps)?, compatibility: compatibility(ps)?, n_test: ps.len() })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    #[serde(flatten)]
    pub metrics: Metrics,
    pub model: serde_json::Value,
}

/// Columns `index, <inputs...>, truth, mean, sd`; unknown truths are blank.
pub fn write_predictions<W: io::Write>(ps: &PredictionSet, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["index".to_string()];
    header.extend(ps.input_names.iter().cloned());
    header.extend(["truth", "mean", "sd"].map(String::from));
    w.write_record(&header)?;
    for r in &ps.rows {
        let mut rec = vec![r.index.to_string()];
        rec.extend(r.x.iter().map(f64::to_string));
        rec.push(r.truth.map_or_else(String::new, |t| t.to_string()));
        rec.push(r.mean.to_string());
        rec.push(r.sd.to_string());
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io("predictions", e))
}

pub fn read_predictions<R: io::Read>(reader: R) -> Result<PredictionSet> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_owned).collect();
    let k = header.len();
    if k < 4 || header[0] != "index" || header[k - 3..] != ["truth", "mean", "sd"] {
        return Err(Error::InvalidData(
            "predictions header must be index, <inputs...>, truth, mean, sd".into(),
        ));
    }
    let num = |row: usize, col: usize, raw: &str| -> Result<f64> {
        raw.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| Error::NonNumeric {
            row,
            column: header[col].clone(),
            value: raw.to_owned(),
        })
    };
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row = i + 1;
        let index = rec[0].parse::<usize>().map_err(|_| Error::NonNumeric {
            row,
            column: "index".into(),
            value: rec[0].to_owned(),
        })?;
        let x = (1..k - 3).map(|c| num(row, c, &rec[c])).collect::<Result<Vec<_>>>()?;
        let truth = match &rec[k - 3] {
            "" => None,
            raw => Some(num(row, k - 3, raw)?),
        };
        rows.push(Prediction {
            index,
            x,
            truth,
            mean: num(row, k - 2, &rec[k - 2])?,
            sd: num(row, k - 1, &rec[k - 1])?,
        });
    }
    PredictionSet::new(header[1..k - 3].to_vec(), rows)
}

/// Writes `predictions.csv` and `summary.json` into `dir`.
pub fn emit_prediction_report(
    ps: &PredictionSet,
    model: serde_json::Value,
    dir: impl AsRef<Path>,
) -> Result<Summary> {
    let dir = dir.as_ref();
    let summary = Summary { metrics: metrics(ps)?, model };
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let path = dir.join("predictions.csv");
    let file = std::fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
    write_predictions(ps, io::BufWriter::new(file))?;
    write_json(dir.join("summary.json"), &summary)?;
    Ok(summary)
}
