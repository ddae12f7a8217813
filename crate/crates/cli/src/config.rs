//! Run configuration: a TOML file with `[data]`, `[model]`, `[chain]` and
//! `[output]` tables, overridable from the command line.

use std::path::{Path, PathBuf};

use hdcpr::inference::{ChainConfig, PriorChoice};
use hdcpr::model::{GammaHyper, NoiseModel, PriorFamily};
use hdcpr::samplers::ConditionalForm;
use serde::{Deserialize, Serialize};

use crate::{CliError, Result};

pub const SEED_ENV: &str = "HDCPR_SEED";
pub const DEFAULT_SEED: u64 = 20_240_601;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub data: DataConfig,
    #[serde(default)]
    pub model: ModelConfig,
    #[serde(default)]
    pub chain: ChainSettings,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    pub input: PathBuf,
    pub response: String,
    pub threshold: String,
    /// Non-numeric row label (e.g. `1991Q1`), never used as a covariate.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    /// Covariate columns; all remaining columns when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub covariates: Option<Vec<String>>,
    /// Appends the response lagged by this many rows as a covariate named
    /// `<response>_lag<lag>`; 0 disables it.
    #[serde(default)]
    pub lag: usize,
    /// Appends an all-ones column named `intercept`.
    #[serde(default)]
    pub intercept: bool,
    /// Columns that always take the slab under the spike-and-slab prior.
    #[serde(default)]
    pub forced_in: Vec<String>,
    /// Trailing rows held out for one-step-ahead RMSPE.
    #[serde(default)]
    pub holdout: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum KSpec {
    One(usize),
    Many(Vec<usize>),
}

impl KSpec {
    pub fn values(&self) -> Vec<usize> {
        let mut v = match self {
            KSpec::One(k) => vec![*k],
            KSpec::Many(ks) => ks.clone(),
        };
        v.sort_unstable();
        v.dedup();
        v
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelConfig {
    pub prior: PriorFamily,
    pub k: KSpec,
    /// Change-point support; defaults to the range of the threshold column.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cp_bounds: Option<(f64, f64)>,
    pub tail_prob: f64,
    pub lambda_r: f64,
    pub lambda_s: f64,
    pub a_sigma: f64,
    pub b_sigma: f64,
    pub exact_conditionals: bool,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            prior: PriorFamily::Basad,
            k: KSpec::One(1),
            cp_bounds: None,
            tail_prob: 0.1,
            lambda_r: 1.0,
            lambda_s: 1.0,
            a_sigma: 2.0,
            b_sigma: 1.0,
            exact_conditionals: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChainSettings {
    pub iterations: usize,
    pub burn_in: usize,
    pub thin: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub proposal_sd: f64,
    pub jitter_start: bool,
}

impl Default for ChainSettings {
    fn default() -> Self {
        Self {
            iterations: 100_000,
            burn_in: 50_000,
            thin: 1,
            seed: None,
            proposal_sd: 0.1f64.sqrt(),
            jitter_start: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub level: f64,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("hdcpr-out"),
            level: 0.95,
        }
    }
}

impl RunConfig {
    /// Reads a TOML file. Relative paths inside it are taken relative to the
    /// file's directory.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut cfg: RunConfig = toml::from_str(&text).map_err(|e| CliError::Parse {
            path: path.to_path_buf(),
            detail: e.to_string(),
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        if cfg.data.input.is_relative() {
            cfg.data.input = base.join(&cfg.data.input);
        }
        if cfg.output.dir.is_relative() {
            cfg.output.dir = base.join(&cfg.output.dir);
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let ks = self.model.k.values();
        if ks.is_empty() {
            return Err(CliError::Config("no change-point count given".into()));
        }
        if self.model.prior == PriorFamily::GroupLasso && ks != [1] {
            return Err(CliError::Config("the group Lasso prior needs exactly one change point".into()));
        }
        if !(self.output.level > 0.0 && self.output.level < 1.0) {
            return Err(CliError::Config(format!("credible level {} outside (0, 1)", self.output.level)));
        }
        if !(self.model.tail_prob > 0.0 && self.model.tail_prob < 1.0) {
            return Err(CliError::Config(format!("tail probability {} outside (0, 1)", self.model.tail_prob)));
        }
        Ok(())
    }

    pub fn prior_choice(&self, forced_in: Vec<bool>) -> PriorChoice {
        let hyper = GammaHyper {
            r: self.model.lambda_r,
            s: self.model.lambda_s,
        };
        match self.model.prior {
            PriorFamily::Basad => PriorChoice::BasadDefault {
                tail_prob: self.model.tail_prob,
                forced_in,
            },
            PriorFamily::Lasso => PriorChoice::Lasso { hyper },
            PriorFamily::GroupLasso => PriorChoice::GroupLasso { hyper },
        }
    }

    /// Chain settings for `k` change points. The seed must already be
    /// resolved.
    pub fn chain_config(&self, k: usize, cp_bounds: (f64, f64), forced_in: Vec<bool>) -> Result<ChainConfig> {
        let seed = self
            .chain
            .seed
            .ok_or_else(|| CliError::Config("seed not resolved".into()))?;
        let mut c = ChainConfig::new(k, cp_bounds)
            .with_sweeps(self.chain.iterations, self.chain.burn_in)
            .with_seed(seed)
            .with_prior(self.prior_choice(forced_in));
        c.thin = self.chain.thin;
        c.proposal_sd = self.chain.proposal_sd;
        c.jitter_start = self.chain.jitter_start;
        c.noise = NoiseModel::new(self.model.a_sigma, self.model.b_sigma)?;
        c.conditionals = ConditionalForm::from_exact_flag(self.model.exact_conditionals);
        c.validate()?;
        Ok(c)
    }
}

/// Seed precedence: command-line flag, then the `HDCPR_SEED` environment
/// variable, then the config file, then [`DEFAULT_SEED`].
pub fn resolve_seed(flag: Option<u64>, env: Option<&str>, config: Option<u64>) -> Result<u64> {
    if let Some(s) = flag {
        return Ok(s);
    }
    if let Some(v) = env {
        let v = v.trim();
        if !v.is_empty() {
            return v
                .parse()
                .map_err(|_| CliError::Config(format!("{SEED_ENV}=`{v}` is not an unsigned integer")));
        }
    }
    Ok(config.unwrap_or(DEFAULT_SEED))
}
