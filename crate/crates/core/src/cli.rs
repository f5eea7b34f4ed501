//! The `inhomo` command line.
//!
//! Every subcommand reads CSV, writes JSON/CSV, and maps library errors to
//! exit codes 2 (usage or configuration), 3 (data) and 4 (numerical).
//! Outputs without an explicit path land in `$INHOM_OUT_DIR` when it is set
//! and in the working directory otherwise.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{ArgAction, Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::config::{load_config, RunConfig};
use crate::dataset::{load_csv, read_csv, Dataset, Schema};
use crate::error::{Error, Result};
use crate::evaluation::{metrics, read_predictions, write_predictions, Metrics, Summary};
use crate::inference::{ChainConfig, ModelKind, TraceWriter, WindowSource};
use crate::inhomogeneity::{inhomogeneity_of, write_lvalues, EstimatorKind, InhomReport, Tolerance};
use crate::model::{fit_model_with, read_test_data, FittedModel, TestData};
use crate::report::{to_json_string, write_json};
use crate::stationarity::{adf_test, LagRule};
use crate::synth::{sample, NoisyTrend, SynthKind, SynthSpec};

pub const OUT_DIR_ENV: &str = "INHOM_OUT_DIR";

#[derive(Debug, Parser)]
#[command(
    name = "inhomo",
    version,
    about = "Inhomogeneity of training data, ADF testing, and stationary / nonstationary GP regression by MCMC"
)]
pub struct Cli {
    /// Progress on stderr; repeat for more detail [default: quiet]
    #[arg(short, long, action = ArgAction::Count, global = true)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Inhomogeneity parameter p_D of a dataset
    Inhom(InhomArgs),
    /// Augmented Dickey-Fuller unit-root test on one column
    Adf(AdfArgs),
    /// Fit a stationary or nonstationary GP by MCMC
    Fit(FitArgs),
    /// Predict test outputs with a fitted model
    Predict(PredictArgs),
    /// RMSE and compatibility C of a predictions file
    Evaluate(EvaluateArgs),
    /// Sample a synthetic dataset
    Synth(SynthArgs),
    /// Fit, predict and evaluate several models on one train/test pair
    Pipeline(PipelineArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EstimatorArg {
    Windowed,
    Tensor,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LagRuleArg {
    Aic,
    Fixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelArg {
    Stationary,
    Nonstationary,
}

impl From<ModelArg> for ModelKind {
    fn from(m: ModelArg) -> Self {
        match m {
            ModelArg::Stationary => ModelKind::Stationary,
            ModelArg::Nonstationary => ModelKind::Nonstationary,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum WindowArg {
    Predicted,
    Sampled,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SynthKindArg {
    StationaryGp,
    PiecewiseGp,
    UnitRoot,
    NoisyTrend,
}

#[derive(Debug, Args)]
pub struct InhomArgs {
    /// Dataset CSV [default: paths.input from --config]
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Output columns, comma separated
    #[arg(long, value_delimiter = ',', required = true)]
    pub outputs: Vec<String>,
    /// Input columns, comma separated (only checked for presence) [default: none]
    #[arg(long, value_delimiter = ',')]
    pub inputs: Vec<String>,
    /// Output tensor shape such as 3x4 [default: number of output columns]
    #[arg(long)]
    pub shape: Option<String>,
    /// Constant band half-width [default: 0.05, or the [tolerance] table]
    #[arg(long, conflicts_with_all = ["beta", "noise"])]
    pub delta: Option<f64>,
    /// Proportional band half-width beta * L_i, 0 < beta < 1 [default: unset]
    #[arg(long, conflicts_with = "noise")]
    pub beta: Option<f64>,
    /// Per-index half-widths from a CSV with a `delta` column, as written by `synth --noise-out` [default: unset]
    #[arg(long)]
    pub noise: Option<PathBuf>,
    /// Correlation estimator [default: windowed, or the [estimator] table]
    #[arg(long, value_enum)]
    pub estimator: Option<EstimatorArg>,
    /// Half-width h of the windowed estimator [default: 5]
    #[arg(long)]
    pub half_width: Option<usize>,
    /// JSON report path [default: $INHOM_OUT_DIR/report.json]
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write the L-series CSV here [default: not written]
    #[arg(long)]
    pub lvalues: Option<PathBuf>,
    /// TOML run configuration [default: none]
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AdfArgs {
    /// Series CSV [default: paths.input from --config]
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Column holding the series
    #[arg(long)]
    pub column: String,
    /// Largest lag considered [default: floor(12 (n/100)^(1/4))]
    #[arg(long)]
    pub max_lag: Option<usize>,
    /// Lag selection [default: aic]
    #[arg(long, value_enum)]
    pub lag_rule: Option<LagRuleArg>,
    /// JSON result path [default: $INHOM_OUT_DIR/adf.json]
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// TOML run configuration [default: none]
    #[arg(long)]
    pub config: Option<PathBuf>,
}

/// Chain options shared by `fit` and `pipeline`.
#[derive(Debug, Args)]
pub struct ChainArgs {
    /// Total MCMC iterations [default: 20000]
    #[arg(long)]
    pub n_iter: Option<usize>,
    /// Burn-in iterations [default: 5000]
    #[arg(long)]
    pub n_burn: Option<usize>,
    /// Lookback window length of the nonstationary model [default: 100]
    #[arg(long)]
    pub lookback: Option<usize>,
    /// What the lookback windows store [default: predicted]
    #[arg(long, value_enum)]
    pub window_source: Option<WindowArg>,
    /// Global random seed [default: 0]
    #[arg(long)]
    pub seed: Option<u64>,
    /// TOML run configuration [default: none]
    #[arg(long)]
    pub config: Option<PathBuf>,
}

/// Column selection shared by `fit` and `pipeline`.
#[derive(Debug, Args)]
pub struct ColumnArgs {
    /// Input columns, comma separated [default: every column except the output]
    #[arg(long, value_delimiter = ',')]
    pub inputs: Option<Vec<String>>,
    /// Output column [default: last column]
    #[arg(long)]
    pub output: Option<String>,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Model to fit [default: stationary, or chain.model from --config]
    #[arg(long, value_enum)]
    pub model: Option<ModelArg>,
    /// Training CSV [default: paths.input from --config]
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[command(flatten)]
    pub columns: ColumnArgs,
    #[command(flatten)]
    pub chain: ChainArgs,
    /// Model JSON path [default: $INHOM_OUT_DIR/model.json]
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Stream the full trace to this CSV [default: not written]
    #[arg(long)]
    pub trace: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    /// Model JSON written by `fit` [default: paths.model from --config]
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Test CSV holding the model's input columns and optionally its output column [default: paths.test]
    #[arg(long)]
    pub test: Option<PathBuf>,
    /// Predictions CSV path [default: $INHOM_OUT_DIR/predictions.csv]
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// TOML run configuration [default: none]
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Predictions CSV written by `predict` [default: paths.predictions from --config]
    #[arg(long)]
    pub predictions: Option<PathBuf>,
    /// Model JSON to describe in the summary [default: none]
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Summary JSON path [default: $INHOM_OUT_DIR/summary.json]
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// TOML run configuration [default: none]
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Generator
    #[arg(long, value_enum)]
    pub kind: SynthKindArg,
    /// Number of observations
    #[arg(long, default_value_t = 500)]
    pub n: usize,
    /// Random seed
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Length scale of stationary-gp
    #[arg(long, default_value_t = 5.0)]
    pub lengthscale: f64,
    /// Segment length scales of piecewise-gp; segments have equal size
    #[arg(long, value_delimiter = ',', default_values_t = [5.0, 0.05])]
    pub lengthscales: Vec<f64>,
    /// Step sd of unit-root
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
    /// Input grid step of the GP generators
    #[arg(long, default_value_t = 0.02)]
    pub spacing: f64,
    /// Data CSV path [default: $INHOM_OUT_DIR/data.csv]
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Per-index noise bounds of noisy-trend (columns index, delta) [default: not written]
    #[arg(long)]
    pub noise_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PipelineArgs {
    /// Training CSV [default: paths.train from --config]
    #[arg(long)]
    pub train: Option<PathBuf>,
    /// Test CSV with the same columns [default: paths.test from --config]
    #[arg(long)]
    pub test: Option<PathBuf>,
    /// Models to compare, comma separated
    #[arg(long, value_enum, value_delimiter = ',', default_values_t = [ModelArg::Stationary, ModelArg::Nonstationary])]
    pub models: Vec<ModelArg>,
    #[command(flatten)]
    pub columns: ColumnArgs,
    #[command(flatten)]
    pub chain: ChainArgs,
    /// Output directory [default: $INHOM_OUT_DIR, else the working directory]
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

/// Parses `argv`, runs the subcommand and returns the process exit code.
pub fn dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            report_error(&e);
            e.exit_code()
        }
    }
}

fn report_error(e: &Error) {
    let kind = match e.exit_code() {
        2 => "usage",
        4 => "numerical",
        _ => "data",
    };
    let mut msg = format!("error[{kind}]: {e}");
    let mut src = std::error::Error::source(e);
    while let Some(s) = src {
        let text = s.to_string();
        if !msg.contains(&text) {
            msg.push_str(&format!("\n  caused by: {text}"));
        }
        src = s.source();
    }
    eprintln!("{msg}");
}

pub fn run(cli: Cli) -> Result<()> {
    let v = cli.verbose;
    match cli.command {
        Command::Inhom(a) => inhom(a, v),
        Command::Adf(a) => adf(a),
        Command::Fit(a) => fit(a, v),
        Command::Predict(a) => predict(a),
        Command::Evaluate(a) => evaluate(a),
        Command::Synth(a) => synth(a),
        Command::Pipeline(a) => pipeline(a, v),
    }
}

fn config(path: &Option<PathBuf>) -> Result<RunConfig> {
    match path {
        Some(p) => load_config(p),
        None => Ok(RunConfig::default()),
    }
}

fn required(flag: Option<PathBuf>, file: &Option<PathBuf>, name: &str) -> Result<PathBuf> {
    flag.or_else(|| file.clone())
        .ok_or_else(|| Error::Config(format!("missing --{name}")))
}

/// Default output directory: `$INHOM_OUT_DIR`, else the working directory.
pub fn default_out_dir() -> PathBuf {
    std::env::var_os(OUT_DIR_ENV).map_or_else(|| PathBuf::from("."), PathBuf::from)
}

fn out_path(flag: Option<PathBuf>, file: &Option<PathBuf>, default_name: &str) -> Result<PathBuf> {
    let path = flag
        .or_else(|| file.clone())
        .unwrap_or_else(|| default_out_dir().join(default_name));
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    Ok(path)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

fn parse_shape(s: &str) -> Result<Vec<usize>> {
    s.split(['x', 'X'])
        .map(|p| {
            p.trim()
                .parse::<usize>()
                .ok()
                .filter(|&m| m > 0)
                .ok_or_else(|| Error::Config(format!("bad --shape {s:?}")))
        })
        .collect()
}

/// Reads the `delta` column of a noise-bound file.
fn read_noise(path: &Path) -> Result<Vec<f64>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let ds = read_csv(file, &Schema::new(Vec::<String>::new(), ["delta"]))?;
    Ok(ds.output_column(0))
}

fn inhom(a: InhomArgs, verbose: u8) -> Result<()> {
    let cfg = config(&a.config)?;
    let input = required(a.input, &cfg.paths.input, "input")?;
    let mut schema = Schema::new(a.inputs, a.outputs);
    if let Some(s) = &a.shape {
        schema = schema.with_shape(parse_shape(s)?);
    }
    let ds = load_csv(&input, &schema)?;

    let mut est = cfg.estimator;
    if let Some(k) = a.estimator {
        est.kind = match k {
            EstimatorArg::Windowed => EstimatorKind::Windowed,
            EstimatorArg::Tensor => EstimatorKind::Tensor,
        };
    }
    if let Some(h) = a.half_width {
        est.half_width = h;
    }
    est.validate()?;

    let tol = if let Some(d) = a.delta {
        Tolerance::Constant(d)
    } else if let Some(b) = a.beta {
        Tolerance::Proportional(b)
    } else if let Some(p) = &a.noise {
        let mut d = read_noise(p)?;
        if d.len() < ds.len() - 1 {
            return Err(Error::InvalidData(format!(
                "noise file has {} bounds, need {}",
                d.len(),
                ds.len() - 1
            )));
        }
        d.truncate(ds.len() - 1);
        Tolerance::PerIndex(d)
    } else {
        cfg.tolerance.tolerance()
    };
    tol.validate()?;

    let (ls, report) = inhomogeneity_of(&ds, &est, tol)?;
    let out = out_path(a.out, &cfg.paths.out, "report.json")?;
    write_json(&out, &report)?;
    if let Some(p) = a.lvalues.or(cfg.paths.lvalues) {
        let p = out_path(Some(p), &None, "")?;
        let mut w = create(&p)?;
        write_lvalues(&ls, &report.incompatible_indices, &mut w)?;
        w.flush().map_err(|e| Error::io(&p, e))?;
    }
    if verbose > 0 || cfg.verbosity > 0 {
        eprintln!("N = {}, m = {}, p_D = {}", report.n, report.m, report.p);
    }
    Ok(())
}

fn adf(a: AdfArgs) -> Result<()> {
    let cfg = config(&a.config)?;
    let input = required(a.input, &cfg.paths.input, "input")?;
    let ds = load_csv(&input, &Schema::new(Vec::<String>::new(), [a.column.as_str()]))?;
    let mut adf_cfg = cfg.adf;
    if a.max_lag.is_some() {
        adf_cfg.max_lag = a.max_lag;
    }
    if let Some(r) = a.lag_rule {
        adf_cfg.lag_rule = match r {
            LagRuleArg::Aic => LagRule::Aic,
            LagRuleArg::Fixed => LagRule::Fixed,
        };
    }
    let res = adf_test(&ds.output_column(0), &adf_cfg)?;
    write_json(out_path(a.out, &cfg.paths.out, "adf.json")?, &res)
}

/// Input and output columns of a training file.
fn training_schema(path: &Path, cols: &ColumnArgs) -> Result<Schema> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let header: Vec<String> = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(file)
        .headers()?
        .iter()
        .map(str::to_owned)
        .collect();
    let output = match &cols.output {
        Some(o) => o.clone(),
        None => header
            .last()
            .cloned()
            .ok_or_else(|| Error::InvalidData(format!("{} has an empty header", path.display())))?,
    };
    let inputs = match &cols.inputs {
        Some(i) => i.clone(),
        None => header.iter().filter(|h| **h != output).cloned().collect(),
    };
    if inputs.is_empty() {
        return Err(Error::Config("no input columns".into()));
    }
    Ok(Schema::new(inputs, [output]))
}

fn chain_config(cfg: &RunConfig, a: &ChainArgs, model: Option<ModelKind>) -> ChainConfig {
    let mut c = cfg.chain();
    if let Some(m) = model {
        c.model = m;
    }
    if let Some(n) = a.n_iter {
        c.n_iter = n;
    }
    if let Some(n) = a.n_burn {
        c.n_burn = n;
    }
    if let Some(l) = a.lookback {
        c.lookback = l;
    }
    if let Some(w) = a.window_source {
        c.window_source = match w {
            WindowArg::Predicted => WindowSource::Predicted,
            WindowArg::Sampled => WindowSource::Sampled,
        };
    }
    if let Some(s) = a.seed {
        c.rng_seed = s;
    }
    c
}

/// Runs one chain, streaming the trace to `trace` when given.
fn fit_one(train: &Dataset, chain: &ChainConfig, trace: Option<&Path>, verbose: u8) -> Result<FittedModel> {
    let mut writer = match trace {
        Some(p) => Some((TraceWriter::new(create(p)?, chain.model, train.input_dim())?, p)),
        None => None,
    };
    let every = (chain.n_iter / 10).max(1);
    let label = chain.model.as_str();
    let m = fit_model_with(train, 0, chain, |r| {
        if let Some((w, _)) = writer.as_mut() {
            w.write(r)?;
            if r.iter % 1000 == 0 {
                w.flush()?;
            }
        }
        if verbose > 0 && r.iter % every == 0 {
            eprintln!("{label}: iteration {}/{}", r.iter, chain.n_iter);
        }
        Ok(())
    })?;
    if let Some((w, _)) = writer {
        w.finish()?;
    }
    for warning in &m.summary.warnings {
        eprintln!("warning ({label}): {warning}");
    }
    Ok(m)
}

fn fit(a: FitArgs, verbose: u8) -> Result<()> {
    let cfg = config(&a.chain.config)?;
    let input = required(a.input, &cfg.paths.input, "input")?;
    let train = load_csv(&input, &training_schema(&input, &a.columns)?)?;
    let chain = chain_config(&cfg, &a.chain, a.model.map(Into::into));
    chain.validate()?;
    let trace = match a.trace.or_else(|| cfg.paths.trace.clone()) {
        Some(p) => Some(out_path(Some(p), &None, "")?),
        None => None,
    };
    let m = fit_one(&train, &chain, trace.as_deref(), verbose.max(cfg.verbosity))?;
    m.save(out_path(a.out, &cfg.paths.out, "model.json")?)
}

fn predict(a: PredictArgs) -> Result<()> {
    let cfg = config(&a.config)?;
    let model = FittedModel::load(required(a.model, &cfg.paths.model, "model")?)?;
    let test_path = required(a.test, &cfg.paths.test, "test")?;
    let file = File::open(&test_path).map_err(|e| Error::io(&test_path, e))?;
    let test = read_test_data(file, &model.input_names, &model.output_name)?;
    let ps = model.predict_set(&test)?;
    let out = out_path(a.out, &cfg.paths.out, "predictions.csv")?;
    let mut w = create(&out)?;
    write_predictions(&ps, &mut w)?;
    w.flush().map_err(|e| Error::io(&out, e))
}

fn evaluate(a: EvaluateArgs) -> Result<()> {
    let cfg = config(&a.config)?;
    let path = required(a.predictions, &cfg.paths.predictions, "predictions")?;
    let file = File::open(&path).map_err(|e| Error::io(&path, e))?;
    let ps = read_predictions(file)?;
    let model = match a.model.or_else(|| cfg.paths.model.clone()) {
        Some(p) => FittedModel::load(p)?.descriptor(),
        None => serde_json::Value::Null,
    };
    let summary = Summary { metrics: metrics(&ps)?, model };
    write_json(out_path(a.out, &cfg.paths.out, "summary.json")?, &summary)
}

fn synth(a: SynthArgs) -> Result<()> {
    let kind = match a.kind {
        SynthKindArg::StationaryGp => SynthKind::StationaryGp { lengthscale: a.lengthscale },
        SynthKindArg::PiecewiseGp => {
            let k = a.lengthscales.len();
            SynthKind::PiecewiseGp {
                lengthscales: a.lengthscales.clone(),
                starts: (1..k).map(|s| s * a.n / k + 1).collect(),
            }
        }
        SynthKindArg::UnitRoot => SynthKind::UnitRoot { sigma: a.sigma },
        SynthKindArg::NoisyTrend => SynthKind::NoisyTrend(NoisyTrend::default()),
    };
    if a.noise_out.is_some() && a.kind != SynthKindArg::NoisyTrend {
        return Err(Error::Config("--noise-out applies to --kind noisy-trend only".into()));
    }
    let mut spec = SynthSpec::new(kind, a.n, a.seed);
    spec.spacing = a.spacing;
    let (ds, noise) = sample(&spec)?;
    let out = out_path(a.out, &None, "data.csv")?;
    let mut w = create(&out)?;
    crate::dataset::write_csv_to(&ds, &mut w)?;
    w.flush().map_err(|e| Error::io(&out, e))?;
    if let (Some(p), Some(bounds)) = (a.noise_out, noise) {
        let p = out_path(Some(p), &None, "")?;
        let mut w = csv::Writer::from_writer(create(&p)?);
        w.write_record(["index", "delta"])?;
        for (i, d) in bounds.iter().enumerate() {
            w.write_record([(i + 1).to_string(), d.to_string()])?;
        }
        w.flush().map_err(|e| Error::io(&p, e))?;
    }
    Ok(())
}

struct ModelResult {
    model: FittedModel,
    metrics: Metrics,
}

fn pipeline(a: PipelineArgs, verbose: u8) -> Result<()> {
    let cfg = config(&a.chain.config)?;
    let verbose = verbose.max(cfg.verbosity);
    let train_path = required(a.train, &cfg.paths.train, "train")?;
    let test_path = required(a.test, &cfg.paths.test, "test")?;
    let schema = training_schema(&train_path, &a.columns)?;
    let train = load_csv(&train_path, &schema)?;
    let test_file = File::open(&test_path).map_err(|e| Error::io(&test_path, e))?;
    let test = TestData::from_dataset(&read_csv(test_file, &schema)?, 0);

    let mut models: Vec<ModelKind> = a.models.iter().map(|&m| m.into()).collect();
    models.dedup();
    let chains: Vec<ChainConfig> = models
        .iter()
        .map(|&m| chain_config(&cfg, &a.chain, Some(m)))
        .collect();
    for c in &chains {
        c.validate()?;
    }
    let dir = a.out_dir.or_else(|| cfg.paths.out_dir.clone()).unwrap_or_else(default_out_dir);
    std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;

    let inhom: Option<InhomReport> = match inhomogeneity_of(&train, &cfg.estimator, cfg.tolerance.tolerance()) {
        Ok((_, r)) => {
            write_json(dir.join("inhom.json"), &r)?;
            Some(r)
        }
        Err(e) => {
            eprintln!("warning: p_D of the training set unavailable: {e}");
            None
        }
    };

    // independent chains on their own RNG streams, one thread each
    let results: Vec<Result<ModelResult>> = std::thread::scope(|s| {
        let handles: Vec<_> = chains
            .iter()
            .map(|c| {
                let (train, test, dir) = (&train, &test, &dir);
                s.spawn(move || -> Result<ModelResult> {
                    let name = c.model.as_str();
                    let trace = dir.join(format!("trace-{name}.csv"));
                    let model = fit_one(train, c, Some(&trace), verbose)?;
                    model.save(dir.join(format!("model-{name}.json")))?;
                    let ps = model.predict_set(test)?;
                    let mut w = create(&dir.join(format!("predictions-{name}.csv")))?;
                    write_predictions(&ps, &mut w)?;
                    w.flush().map_err(|e| Error::io(dir, e))?;
                    Ok(ModelResult { metrics: metrics(&ps)?, model })
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().unwrap_or_else(|_| Err(Error::Precondition("model thread panicked".into()))))
            .collect()
    });
    let results = results.into_iter().collect::<Result<Vec<_>>>()?;

    let mut table = csv::Writer::from_writer(create(&dir.join("comparison.csv"))?);
    table.write_record(["model", "rmse", "C"])?;
    let mut by_model = serde_json::Map::new();
    for r in &results {
        let name = r.model.model.as_str();
        table.write_record([name.to_string(), r.metrics.rmse.to_string(), r.metrics.compatibility.to_string()])?;
        by_model.insert(
            name.into(),
            json!({
                "rmse": r.metrics.rmse,
                "C": r.metrics.compatibility,
                "n_test": r.metrics.n_test,
                "model": r.model.descriptor(),
            }),
        );
    }
    table.flush().map_err(|e| Error::io(&dir, e))?;
    let comparison = json!({
        "n_train": train.len(),
        "p_D": inhom.as_ref().map(|r| r.p),
        "models": by_model,
    });
    write_json(dir.join("comparison.json"), &comparison)?;

    println!("{:<15} {:>12} {:>8}", "model", "RMSE", "C");
    for r in &results {
        println!("{:<15} {:>12.6} {:>8.4}", r.model.model.as_str(), r.metrics.rmse, r.metrics.compatibility);
    }
    if verbose > 1 {
        eprintln!("{}", to_json_string(&comparison)?);
    }
    Ok(())
}
