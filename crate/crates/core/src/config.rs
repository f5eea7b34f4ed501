//! Run configuration files.
//!
//! A config file is TOML with optional top-level keys `rng_seed` and
//! `verbosity` and optional tables `[paths]`, `[tolerance]`, `[estimator]`,
//! `[chain]` and `[adf]`. Unknown keys are rejected. Command-line flags
//! override whatever the file sets.
//!
//! ```toml
//! rng_seed = 7
//!
//! [tolerance]
//! mode = "constant"
//! delta = 0.05
//!
//! [chain]
//! model = "nonstationary"
//! n_iter = 5000
//! n_burn = 1000
//! lookback = 50
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inference::ChainConfig;
use crate::inhomogeneity::{CorrEstimatorConfig, Tolerance};
use crate::stationarity::AdfConfig;

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub input: Option<PathBuf>,
    pub train: Option<PathBuf>,
    pub test: Option<PathBuf>,
    pub model: Option<PathBuf>,
    pub predictions: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
    pub trace: Option<PathBuf>,
    pub lvalues: Option<PathBuf>,
}

/// File form of the tolerance band. Per-index bands come from a noise file
/// on the command line instead.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum ToleranceConfig {
    Constant {
        #[serde(default = "default_delta")]
        delta: f64,
    },
    Proportional {
        beta: f64,
    },
}

fn default_delta() -> f64 {
    0.05
}

impl Default for ToleranceConfig {
    fn default() -> Self {
        ToleranceConfig::Constant { delta: default_delta() }
    }
}

impl ToleranceConfig {
    pub fn tolerance(&self) -> Tolerance {
        match *self {
            ToleranceConfig::Constant { delta } => Tolerance::Constant(delta),
            ToleranceConfig::Proportional { beta } => Tolerance::Proportional(beta),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Global seed. Overrides `chain.rng_seed` when set.
    pub rng_seed: Option<u64>,
    pub verbosity: u8,
    pub paths: Paths,
    pub tolerance: ToleranceConfig,
    pub estimator: CorrEstimatorConfig,
    pub chain: ChainConfig,
    pub adf: AdfConfig,
}

impl RunConfig {
    /// Checks the option blocks. Chain settings are checked separately,
    /// after command-line overrides are applied.
    pub fn validate(&self) -> Result<()> {
        self.tolerance.tolerance().validate()?;
        self.estimator.validate()
    }

    /// The chain block with the global seed applied.
    pub fn chain(&self) -> ChainConfig {
        let mut c = self.chain.clone();
        if let Some(seed) = self.rng_seed {
            c.rng_seed = seed;
        }
        c
    }
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// Parses config text. `origin` names the source in error messages.
pub fn parse_config(text: &str, origin: &str) -> Result<RunConfig> {
    let cfg: RunConfig = toml::from_str(text).map_err(|e| {
        let msg = e.message().trim_end().to_string();
        match e.span() {
            Some(span) => Error::Config(format!("{origin}:{}: {msg}", line_of(text, span.start))),
            None => Error::Config(format!("{origin}: {msg}")),
        }
    })?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config(path: impl AsRef<Path>) -> Result<RunConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config(&text, &path.display().to_string())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inference::ModelKind;
    use crate::stationarity::LagRule;

    #[test]
    fn empty_file_gives_defaults() {
        assert_eq!(parse_config("", "x").unwrap(), RunConfig::default());
        assert_eq!(parse_config("# nothing\n\n", "x").unwrap(), RunConfig::default());
    }

    #[test]
    fn blocks_parse() {
        let cfg = parse_config(
            r#"
rng_seed = 9
verbosity = 1

[paths]
input = "d.csv"

[tolerance]
mode = "proportional"
beta = 0.1

[estimator]
kind = "tensor"

[chain]
model = "nonstationary"
lookback = 100
seeds = [2.0]

[adf]
max_lag = 4
lag_rule = "fixed"
"#,
            "run.toml",
        )
        .unwrap();
        assert_eq!(cfg.paths.input.as_deref(), Some(Path::new("d.csv")));
        assert_eq!(cfg.tolerance.tolerance(), Tolerance::Proportional(0.1));
        assert_eq!(cfg.estimator.half_width, 5);
        assert_eq!(cfg.chain.model, ModelKind::Nonstationary);
        assert_eq!(cfg.chain.lookback, 100);
        assert_eq!(cfg.chain.n_iter, ChainConfig::default().n_iter);
        assert_eq!(cfg.chain().rng_seed, 9);
        assert_eq!(cfg.adf, AdfConfig { max_lag: Some(4), lag_rule: LagRule::Fixed });
    }

    #[test]
    fn constant_tolerance_defaults_delta() {
        let cfg = parse_config("[tolerance]\nmode = \"constant\"\n", "x").unwrap();
        assert_eq!(cfg.tolerance.tolerance(), Tolerance::Constant(0.05));
    }

    #[test]
    fn errors_are_located() {
        let e = parse_config("rng_seed = 1\n\n[chain]\nlookback = \n", "run.toml").unwrap_err();
        assert!(e.to_string().contains("run.toml:4"), "{e}");
        assert_eq!(e.exit_code(), 2);

        let e = parse_config("[chain]\nn_iter = 10\nlokback = 5\n", "run.toml").unwrap_err();
        assert!(e.to_string().contains("run.toml:3"), "{e}");
        assert!(e.to_string().contains("lokback"), "{e}");

        let e = parse_config("[tolerance]\nmode = \"constant\"\nbeta = 0.1\n", "t").unwrap_err();
        assert_eq!(e.exit_code(), 2);
    }

    #[test]
    fn ranges_are_checked() {
        assert!(parse_config("[tolerance]\nmode = \"proportional\"\nbeta = 1.5\n", "x").is_err());
        assert!(parse_config("[estimator]\nhalf_width = 0\n", "x").is_err());
    }
}
