//! Training/test data: CSV ingestion, output standardisation, the reduced
//! (index-only) view, and disjoint train/test splitting.
//!
//! Outputs may be tensors; they are stored flattened row-major together with
//! the declared shape, so every downstream consumer sees a flat vector of
//! `P = m_1 * ... * m_k` components per observation.

use std::collections::BTreeSet;
use std::io;
use std::path::Path;

use crate::error::{Error, Result};

/// Which CSV columns feed the inputs and which the (flattened) outputs.
///
/// Columns not named here, such as a row index or a timestamp, are ignored.
#[derive(Debug, Clone, Default)]
pub struct Schema {
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    /// Declared output tensor shape; defaults to `[outputs.len()]`.
    pub shape: Option<Vec<usize>>,
}

impl Schema {
    pub fn new<I, O, S, T>(inputs: I, outputs: O) -> Self
    where
        I: IntoIterator<Item = S>,
        O: IntoIterator<Item = T>,
        S: Into<String>,
        T: Into<String>,
    {
        Schema {
            inputs: inputs.into_iter().map(Into::into).collect(),
            outputs: outputs.into_iter().map(Into::into).collect(),
            shape: None,
        }
    }

    pub fn with_shape(mut self, shape: Vec<usize>) -> Self {
        self.shape = Some(shape);
        self
    }
}

/// `N` input/output pairs with `d`-dimensional inputs and `P`-component outputs.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    n: usize,
    d: usize,
    shape: Vec<usize>,
    inputs: Vec<f64>,
    outputs: Vec<f64>,
    input_names: Vec<String>,
    output_names: Vec<String>,
}

impl Dataset {
    /// Builds a dataset from row vectors.
    ///
    /// At least one row is required here; operations that need two or more
    /// (loading training data, the inhomogeneity computation) check that
    /// themselves.
    pub fn new(
        inputs: Vec<Vec<f64>>,
        outputs: Vec<Vec<f64>>,
        input_names: Vec<String>,
        output_names: Vec<String>,
        shape: Vec<usize>,
    ) -> Result<Self> {
        let n = outputs.len();
        if inputs.len() != n {
            return Err(Error::InvalidData(format!(
                "{} input rows but {} output rows",
                inputs.len(),
                n
            )));
        }
        let d = input_names.len();
        let p = output_names.len();
        let mut flat_in = Vec::with_capacity(n * d);
        let mut flat_out = Vec::with_capacity(n * p);
        for (row, (x, y)) in inputs.into_iter().zip(outputs).enumerate() {
            if x.len() != d || y.len() != p {
                return Err(Error::InvalidData(format!(
                    "row {row}: expected {d} inputs and {p} outputs, found {} and {}",
                    x.len(),
                    y.len()
                )));
            }
            flat_in.extend(x);
            flat_out.extend(y);
        }
        Self::from_flat(flat_in, flat_out, input_names, output_names, shape)
    }

    /// Builds a dataset from row-major flat buffers.
    pub fn from_flat(
        inputs: Vec<f64>,
        outputs: Vec<f64>,
        input_names: Vec<String>,
        output_names: Vec<String>,
        shape: Vec<usize>,
    ) -> Result<Self> {
        let d = input_names.len();
        let p = output_names.len();
        if p == 0 {
            return Err(Error::InvalidData("no output columns".into()));
        }
        if shape.iter().product::<usize>() != p || shape.is_empty() {
            return Err(Error::InvalidData(format!(
                "shape {shape:?} does not match {p} output components"
            )));
        }
        if outputs.len() % p != 0 {
            return Err(Error::InvalidData("output buffer is not a whole number of rows".into()));
        }
        let n = outputs.len() / p;
        if n == 0 {
            return Err(Error::TooFewRows { n, min: 1 });
        }
        if inputs.len() != n * d {
            return Err(Error::InvalidData(format!(
                "input buffer has {} values, expected {}",
                inputs.len(),
                n * d
            )));
        }
        if let Some(pos) = inputs.iter().chain(&outputs).position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("data value #{pos}")));
        }
        Ok(Dataset {
            n,
            d,
            shape,
            inputs,
            outputs,
            input_names,
            output_names,
        })
    }

    /// Scalar-output dataset with inputs given as rows.
    pub fn scalar(inputs: Vec<Vec<f64>>, outputs: Vec<f64>) -> Result<Self> {
        let d = inputs.first().map_or(0, Vec::len);
        let input_names = (1..=d).map(|m| format!("x{m}")).collect();
        Self::new(
            inputs,
            outputs.into_iter().map(|y| vec![y]).collect(),
            input_names,
            vec!["y".into()],
            vec![1],
        )
    }

    /// Scalar series with a single input holding the 1-based position.
    pub fn series(values: Vec<f64>) -> Result<Self> {
        let inputs = (1..=values.len()).map(|i| vec![i as f64]).collect();
        Self::scalar(inputs, values)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Input dimension `d`.
    pub fn input_dim(&self) -> usize {
        self.d
    }

    /// Number of flattened output components `P`.
    pub fn output_len(&self) -> usize {
        self.output_names.len()
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn input_names(&self) -> &[String] {
        &self.input_names
    }

    pub fn output_names(&self) -> &[String] {
        &self.output_names
    }

    /// Input vector of row `row` (0-based).
    pub fn input(&self, row: usize) -> &[f64] {
        &self.inputs[row * self.d..(row + 1) * self.d]
    }

    /// Flattened output of row `row` (0-based).
    pub fn output(&self, row: usize) -> &[f64] {
        let p = self.output_len();
        &self.outputs[row * p..(row + 1) * p]
    }

    pub fn inputs_flat(&self) -> &[f64] {
        &self.inputs
    }

    pub fn outputs_flat(&self) -> &[f64] {
        &self.outputs
    }

    pub fn input_rows(&self) -> Vec<Vec<f64>> {
        (0..self.n).map(|i| self.input(i).to_vec()).collect()
    }

    pub fn output_column(&self, component: usize) -> Vec<f64> {
        let p = self.output_len();
        self.outputs.iter().skip(component).step_by(p).copied().collect()
    }

    pub(crate) fn require_rows(&self, min: usize) -> Result<()> {
        if self.n < min {
            Err(Error::TooFewRows { n: self.n, min })
        } else {
            Ok(())
        }
    }

    /// Rows `rows` (0-based) in the given order.
    pub fn select(&self, rows: &[usize]) -> Result<Dataset> {
        let mut inputs = Vec::with_capacity(rows.len() * self.d);
        let mut outputs = Vec::with_capacity(rows.len() * self.output_len());
        for &r in rows {
            if r >= self.n {
                return Err(Error::OutOfRange { index: r, n: self.n });
            }
            inputs.extend_from_slice(self.input(r));
            outputs.extend_from_slice(self.output(r));
        }
        Dataset::from_flat(
            inputs,
            outputs,
            self.input_names.clone(),
            self.output_names.clone(),
            self.shape.clone(),
        )
    }
}

/// Reads a dataset from a UTF-8, comma-separated file with one header row.
pub fn load_csv(path: impl AsRef<Path>, schema: &Schema) -> Result<Dataset> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let ds = read_csv(file, schema)?;
    ds.require_rows(2)?;
    Ok(ds)
}

/// Like [`load_csv`] but accepts any reader and a single row.
pub fn read_csv<R: io::Read>(reader: R, schema: &Schema) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_owned).collect();
    let locate = |name: &String| {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn(name.clone()))
    };
    let in_cols = schema.inputs.iter().map(locate).collect::<Result<Vec<_>>>()?;
    let out_cols = schema.outputs.iter().map(locate).collect::<Result<Vec<_>>>()?;
    let shape = schema.shape.clone().unwrap_or_else(|| vec![out_cols.len()]);

    let mut inputs = Vec::new();
    let mut outputs = Vec::new();
    for (row, record) in rdr.records().enumerate() {
        let record = record?;
        let row = row + 1;
        if record.len() != header.len() {
            return Err(Error::Ragged {
                row,
                expected: header.len(),
                found: record.len(),
            });
        }
        let cell = |col: usize| -> Result<f64> {
            let raw = &record[col];
            raw.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::NonNumeric {
                    row,
                    column: header[col].clone(),
                    value: raw.to_owned(),
                })
        };
        for &c in &in_cols {
            inputs.push(cell(c)?);
        }
        for &c in &out_cols {
            outputs.push(cell(c)?);
        }
    }
    if outputs.is_empty() {
        return Err(Error::TooFewRows { n: 0, min: 1 });
    }
    Dataset::from_flat(
        inputs,
        outputs,
        schema.inputs.clone(),
        schema.outputs.clone(),
        shape,
    )
}

/// Writes inputs then outputs, one row per observation, values in shortest
/// round-trip decimal form.
pub fn write_csv(ds: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_csv_to(ds, file)
}

pub fn write_csv_to<W: io::Write>(ds: &Dataset, writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(ds.input_names().iter().chain(ds.output_names()))?;
    for i in 0..ds.len() {
        let row: Vec<String> = ds
            .input(i)
            .iter()
            .chain(ds.output(i))
            .map(|v| v.to_string())
            .collect();
        wtr.write_record(&row)?;
    }
    wtr.flush().map_err(|e| Error::io("<csv writer>", e))?;
    Ok(())
}

/// Outputs centred and scaled per component (sample sd, denominator `N - 1`).
#[derive(Debug, Clone, PartialEq)]
pub struct StandardizedOutputs {
    n: usize,
    p: usize,
    values: Vec<f64>,
    mean: Vec<f64>,
    sd: Vec<f64>,
}

impl StandardizedOutputs {
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn components(&self) -> usize {
        self.p
    }

    pub fn value(&self, row: usize, component: usize) -> f64 {
        self.values[row * self.p + component]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.values[row * self.p..(row + 1) * self.p]
    }

    pub fn column(&self, component: usize) -> Vec<f64> {
        self.values.iter().skip(component).step_by(self.p).copied().collect()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn sd(&self) -> &[f64] {
        &self.sd
    }

    pub fn unstandardize(&self, value: f64, component: usize) -> f64 {
        value * self.sd[component] + self.mean[component]
    }

    pub fn unstandardize_variance(&self, variance: f64, component: usize) -> f64 {
        variance * self.sd[component] * self.sd[component]
    }
}

/// Mean and sample standard deviation (denominator `n - 1`).
pub fn mean_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    (mean, (ss / (n - 1.0)).sqrt())
}

pub fn standardize(ds: &Dataset) -> Result<StandardizedOutputs> {
    ds.require_rows(2)?;
    let p = ds.output_len();
    let mut mean = Vec::with_capacity(p);
    let mut sd = Vec::with_capacity(p);
    for c in 0..p {
        let col = ds.output_column(c);
        if col.iter().all(|&v| v == col[0]) {
            return Err(Error::ConstantOutput { component: c });
        }
        let (m, s) = mean_sd(&col);
        if !(s > 0.0) {
            return Err(Error::ConstantOutput { component: c });
        }
        mean.push(m);
        sd.push(s);
    }
    let values = ds
        .outputs_flat()
        .iter()
        .enumerate()
        .map(|(k, v)| (v - mean[k % p]) / sd[k % p])
        .collect();
    Ok(StandardizedOutputs {
        n: ds.len(),
        p,
        values,
        mean,
        sd,
    })
}

/// The training outputs keyed by their 1-based position; inputs are dropped.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedDataset {
    p: usize,
    outputs: Vec<f64>,
}

impl ReducedDataset {
    pub fn len(&self) -> usize {
        self.outputs.len() / self.p
    }

    pub fn is_empty(&self) -> bool {
        self.outputs.is_empty()
    }

    pub fn indices(&self) -> std::ops::RangeInclusive<usize> {
        1..=self.len()
    }

    /// Output at 1-based `index`.
    pub fn output(&self, index: usize) -> &[f64] {
        &self.outputs[(index - 1) * self.p..index * self.p]
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, &[f64])> {
        self.outputs.chunks(self.p).enumerate().map(|(i, y)| (i + 1, y))
    }
}

pub fn reduce(ds: &Dataset) -> ReducedDataset {
    ReducedDataset {
        p: ds.output_len(),
        outputs: ds.outputs_flat().to_vec(),
    }
}

/// Splits by 0-based row indices into (train, test).
///
/// Each side keeps source row order. The training side needs two rows, the
/// test side one.
pub fn split(ds: &Dataset, train_idx: &[usize], test_idx: &[usize]) -> Result<(Dataset, Dataset)> {
    let train = sorted_unique(train_idx, ds.len())?;
    let test = sorted_unique(test_idx, ds.len())?;
    if let Some(&r) = train.intersection(&test).next() {
        return Err(Error::Overlap(r));
    }
    if train.len() < 2 {
        return Err(Error::TooFewRows { n: train.len(), min: 2 });
    }
    if test.is_empty() {
        return Err(Error::TooFewRows { n: 0, min: 1 });
    }
    let train: Vec<usize> = train.into_iter().collect();
    let test: Vec<usize> = test.into_iter().collect();
    Ok((ds.select(&train)?, ds.select(&test)?))
}

fn sorted_unique(idx: &[usize], n: usize) -> Result<BTreeSet<usize>> {
    let mut set = BTreeSet::new();
    for &i in idx {
        if i >= n {
            return Err(Error::OutOfRange { index: i, n });
        }
        if !set.insert(i) {
            return Err(Error::Overlap(i));
        }
    }
    Ok(set)
}
