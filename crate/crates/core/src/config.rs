//! Run configuration: a flat `key = value` format with dotted sections,
//! resolved from (in increasing precedence) built-in defaults, a config
//! file, `DSAAE_*` environment variables, repeated `--set key=value`
//! overrides, and the dedicated `--out` / `--seed` flags.
//!
//! Unknown keys are rejected. A fully resolved configuration can be echoed
//! back to text with [`RunConfig::to_kv_lines`] and reparsed into an
//! equivalent configuration.

use std::path::{Path, PathBuf};

use crate::data::ToyKind;
use crate::error::{Error, Result};
use crate::train::{Seeds, TrainConfig, Variant};

/// Prefix for environment-variable overrides; dots in the key become `__`,
/// letters uppercase. `train.batch_size` is read from
/// `DSAAE_TRAIN__BATCH_SIZE`.
pub const ENV_PREFIX: &str = "DSAAE_";

/// Every recognized configuration key.
pub const CONFIG_KEYS: &[&str] = &[
    "train.variant",
    "train.latent_dim",
    "train.hidden_dims",
    "train.batch_size",
    "train.epochs",
    "train.recon_lr",
    "train.adv_lr",
    "train.dropout_input",
    "train.lambda",
    "train.mmd_sigmas",
    "train.rf_sigma",
    "train.rf_count",
    "train.adversary_steps",
    "train.ascent_lr",
    "train.l2_decay",
    "train.alpha_cap",
    "train.resample_features",
    "train.checkpoint_every",
    "train.deterministic_metrics",
    "seeds.weights",
    "seeds.data",
    "seeds.features",
    "seeds.prior",
    "data.source",
    "data.toy_kind",
    "data.toy_n",
    "data.train_images",
    "data.train_labels",
    "data.test_images",
    "data.test_labels",
    "data.limit",
    "data.validation_fraction",
    "eval.samples",
    "eval.sample_seed",
    "eval.bandwidth_grid",
    "sample.n",
    "sample.grid_width",
    "sample.seed",
    "out.dir",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DataSource {
    Toy2d,
    Idx,
}

impl DataSource {
    pub fn parse(s: &str) -> Result<DataSource> {
        match s {
            "toy2d" => Ok(DataSource::Toy2d),
            "idx" => Ok(DataSource::Idx),
            other => Err(Error::config(format!("unknown data source '{other}'"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            DataSource::Toy2d => "toy2d",
            DataSource::Idx => "idx",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DataConfig {
    pub source: DataSource,
    pub toy_kind: ToyKind,
    pub toy_n: usize,
    pub train_images: Option<PathBuf>,
    pub train_labels: Option<PathBuf>,
    pub test_images: Option<PathBuf>,
    pub test_labels: Option<PathBuf>,
    /// Keep only the first N training examples (0 = all).
    pub limit: usize,
    /// Trailing fraction of the training set held out for bandwidth
    /// selection.
    pub validation_fraction: f64,
}

impl Default for DataConfig {
    fn default() -> Self {
        DataConfig {
            source: DataSource::Toy2d,
            toy_kind: ToyKind::GaussianMixture8,
            toy_n: 8000,
            train_images: None,
            train_labels: None,
            test_images: None,
            test_labels: None,
            limit: 0,
            validation_fraction: 0.1,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalConfig {
    /// Number of samples drawn from the model as density centers.
    pub samples: usize,
    pub sample_seed: u64,
    /// Explicit bandwidth grid; `None` selects over the default log-spaced
    /// grid.
    pub bandwidth_grid: Option<Vec<f64>>,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            samples: 10_000,
            sample_seed: 7,
            bandwidth_grid: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SampleConfig {
    pub n: usize,
    pub grid_width: usize,
    pub seed: u64,
}

impl Default for SampleConfig {
    fn default() -> Self {
        SampleConfig {
            n: 100,
            grid_width: 10,
            seed: 7,
        }
    }
}

/// A fully resolved run configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub train: TrainConfig,
    pub data: DataConfig,
    pub eval: EvalConfig,
    pub sample: SampleConfig,
    pub out_dir: Option<PathBuf>,
}

/// Intermediate state while overrides are applied; the latent dimension
/// stays optional so its default can follow the final variant choice.
#[derive(Clone, Debug)]
pub struct RunConfigBuilder {
    variant: Variant,
    latent_dim: Option<usize>,
    train: TrainConfig,
    data: DataConfig,
    eval: EvalConfig,
    sample: SampleConfig,
    out_dir: Option<PathBuf>,
}

impl Default for RunConfigBuilder {
    fn default() -> Self {
        RunConfigBuilder {
            variant: Variant::DsAae,
            latent_dim: None,
            train: TrainConfig::defaults(Variant::DsAae),
            data: DataConfig::default(),
            eval: EvalConfig::default(),
            sample: SampleConfig::default(),
            out_dir: None,
        }
    }
}

impl RunConfigBuilder {
    /// Applies one `key = value` pair; unknown keys are rejected.
    pub fn apply(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        match key {
            "train.variant" => self.variant = Variant::parse(value)?,
            "train.latent_dim" => self.latent_dim = Some(parse_usize(key, value)?),
            "train.hidden_dims" => self.train.hidden_dims = parse_usize_list(key, value)?,
            "train.batch_size" => self.train.batch_size = parse_usize(key, value)?,
            "train.epochs" => self.train.epochs = parse_usize(key, value)?,
            "train.recon_lr" => self.train.recon_lr = parse_f64(key, value)?,
            "train.adv_lr" => self.train.adv_lr = parse_f64(key, value)?,
            "train.dropout_input" => self.train.dropout_input = parse_f64(key, value)?,
            "train.lambda" => self.train.lambda = parse_f64(key, value)?,
            "train.mmd_sigmas" => self.train.mmd_sigmas = parse_f64_list(key, value)?,
            "train.rf_sigma" => self.train.rf_sigma = parse_f64(key, value)?,
            "train.rf_count" => self.train.rf_count = parse_usize(key, value)?,
            "train.adversary_steps" => self.train.adversary_steps = parse_usize(key, value)?,
            "train.ascent_lr" => self.train.ascent_lr = parse_f64(key, value)?,
            "train.l2_decay" => self.train.l2_decay = parse_f64(key, value)?,
            "train.alpha_cap" => self.train.alpha_cap = parse_f64(key, value)?,
            "train.resample_features" => self.train.resample_features = parse_bool(key, value)?,
            "train.checkpoint_every" => self.train.checkpoint_every = parse_usize(key, value)?,
            "train.deterministic_metrics" => {
                self.train.deterministic_metrics = parse_bool(key, value)?
            }
            "seeds.weights" => self.train.seeds.weights = parse_u64(key, value)?,
            "seeds.data" => self.train.seeds.data = parse_u64(key, value)?,
            "seeds.features" => self.train.seeds.features = parse_u64(key, value)?,
            "seeds.prior" => self.train.seeds.prior = parse_u64(key, value)?,
            "data.source" => self.data.source = DataSource::parse(value)?,
            "data.toy_kind" => self.data.toy_kind = ToyKind::parse(value)?,
            "data.toy_n" => self.data.toy_n = parse_usize(key, value)?,
            "data.train_images" => self.data.train_images = parse_path(value),
            "data.train_labels" => self.data.train_labels = parse_path(value),
            "data.test_images" => self.data.test_images = parse_path(value),
            "data.test_labels" => self.data.test_labels = parse_path(value),
            "data.limit" => self.data.limit = parse_usize(key, value)?,
            "data.validation_fraction" => self.data.validation_fraction = parse_f64(key, value)?,
            "eval.samples" => self.eval.samples = parse_usize(key, value)?,
            "eval.sample_seed" => self.eval.sample_seed = parse_u64(key, value)?,
            "eval.bandwidth_grid" => {
                self.eval.bandwidth_grid = if value == "auto" {
                    None
                } else {
                    Some(parse_f64_list(key, value)?)
                }
            }
            "sample.n" => self.sample.n = parse_usize(key, value)?,
            "sample.grid_width" => self.sample.grid_width = parse_usize(key, value)?,
            "sample.seed" => self.sample.seed = parse_u64(key, value)?,
            "out.dir" => self.out_dir = parse_path(value),
            other => return Err(Error::config(format!("unknown config key '{other}'"))),
        }
        Ok(())
    }

    /// Sets all four seed streams from one master seed.
    pub fn set_master_seed(&mut self, seed: u64) {
        self.train.seeds = Seeds::from_master(seed);
    }

    pub fn set_out_dir(&mut self, dir: PathBuf) {
        self.out_dir = Some(dir);
    }

    /// Materializes defaults that depend on other fields.
    pub fn build(mut self) -> RunConfig {
        self.train.variant = self.variant;
        self.train.latent_dim = self.latent_dim.unwrap_or(match self.variant {
            Variant::DsAae => 6,
            Variant::MmdAe => 4,
        });
        RunConfig {
            train: self.train,
            data: self.data,
            eval: self.eval,
            sample: self.sample,
            out_dir: self.out_dir,
        }
    }
}

impl RunConfig {
    /// Resolves a configuration from its layered sources. `env_lookup` maps
    /// an environment variable name to its value (tests inject maps).
    pub fn resolve(
        file_pairs: &[(String, String)],
        env_lookup: impl Fn(&str) -> Option<String>,
        set_pairs: &[(String, String)],
        out_dir: Option<PathBuf>,
        master_seed: Option<u64>,
    ) -> Result<RunConfig> {
        let mut builder = RunConfigBuilder::default();
        for (k, v) in file_pairs {
            builder.apply(k, v)?;
        }
        for key in CONFIG_KEYS {
            if let Some(v) = env_lookup(&env_var_name(key)) {
                builder.apply(key, &v)?;
            }
        }
        for (k, v) in set_pairs {
            builder.apply(k, v)?;
        }
        if let Some(dir) = out_dir {
            builder.set_out_dir(dir);
        }
        if let Some(seed) = master_seed {
            builder.set_master_seed(seed);
        }
        Ok(builder.build())
    }

    pub fn validate(&self) -> Result<()> {
        self.train.validate()?;
        if self.data.toy_n == 0 {
            return Err(Error::validation("data.toy_n must be at least 1"));
        }
        if !(0.0..1.0).contains(&self.data.validation_fraction)
            || self.data.validation_fraction == 0.0
        {
            return Err(Error::validation(
                "data.validation_fraction must lie in (0, 1)",
            ));
        }
        if let Some(grid) = &self.eval.bandwidth_grid {
            if grid.is_empty() || !grid.iter().all(|&s| s.is_finite() && s > 0.0) {
                return Err(Error::validation(
                    "eval.bandwidth_grid must be a nonempty positive list",
                ));
            }
        }
        if self.sample.grid_width == 0 {
            return Err(Error::validation("sample.grid_width must be at least 1"));
        }
        Ok(())
    }

    /// The value of one key, formatted so that reapplying it reproduces the
    /// configuration.
    pub fn get(&self, key: &str) -> Result<String> {
        Ok(match key {
            "train.variant" => self.train.variant.name().to_string(),
            "train.latent_dim" => self.train.latent_dim.to_string(),
            "train.hidden_dims" => join_usize(&self.train.hidden_dims),
            "train.batch_size" => self.train.batch_size.to_string(),
            "train.epochs" => self.train.epochs.to_string(),
            "train.recon_lr" => self.train.recon_lr.to_string(),
            "train.adv_lr" => self.train.adv_lr.to_string(),
            "train.dropout_input" => self.train.dropout_input.to_string(),
            "train.lambda" => self.train.lambda.to_string(),
            "train.mmd_sigmas" => join_f64(&self.train.mmd_sigmas),
            "train.rf_sigma" => self.train.rf_sigma.to_string(),
            "train.rf_count" => self.train.rf_count.to_string(),
            "train.adversary_steps" => self.train.adversary_steps.to_string(),
            "train.ascent_lr" => self.train.ascent_lr.to_string(),
            "train.l2_decay" => self.train.l2_decay.to_string(),
            "train.alpha_cap" => self.train.alpha_cap.to_string(),
            "train.resample_features" => self.train.resample_features.to_string(),
            "train.checkpoint_every" => self.train.checkpoint_every.to_string(),
            "train.deterministic_metrics" => self.train.deterministic_metrics.to_string(),
            "seeds.weights" => self.train.seeds.weights.to_string(),
            "seeds.data" => self.train.seeds.data.to_string(),
            "seeds.features" => self.train.seeds.features.to_string(),
            "seeds.prior" => self.train.seeds.prior.to_string(),
            "data.source" => self.data.source.name().to_string(),
            "data.toy_kind" => self.data.toy_kind.name().to_string(),
            "data.toy_n" => self.data.toy_n.to_string(),
            "data.train_images" => path_str(&self.data.train_images),
            "data.train_labels" => path_str(&self.data.train_labels),
            "data.test_images" => path_str(&self.data.test_images),
            "data.test_labels" => path_str(&self.data.test_labels),
            "data.limit" => self.data.limit.to_string(),
            "data.validation_fraction" => self.data.validation_fraction.to_string(),
            "eval.samples" => self.eval.samples.to_string(),
            "eval.sample_seed" => self.eval.sample_seed.to_string(),
            "eval.bandwidth_grid" => match &self.eval.bandwidth_grid {
                None => "auto".to_string(),
                Some(grid) => join_f64(grid),
            },
            "sample.n" => self.sample.n.to_string(),
            "sample.grid_width" => self.sample.grid_width.to_string(),
            "sample.seed" => self.sample.seed.to_string(),
            "out.dir" => path_str(&self.out_dir),
            other => return Err(Error::config(format!("unknown config key '{other}'"))),
        })
    }

    /// All keys with their resolved values, one `key = value` line each.
    pub fn to_kv_lines(&self) -> Vec<String> {
        CONFIG_KEYS
            .iter()
            .map(|k| format!("{k} = {}", self.get(k).expect("known key")))
            .collect()
    }
}

/// Environment variable carrying overrides for `key`.
pub fn env_var_name(key: &str) -> String {
    format!("{ENV_PREFIX}{}", key.replace('.', "__").to_uppercase())
}

/// Parses config-file text: one `key = value` per line, `#` comment lines,
/// blank lines ignored.
pub fn parse_config_text(text: &str) -> Result<Vec<(String, String)>> {
    let mut pairs = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Error::config(format!(
                "line {}: expected 'key = value', got '{line}'",
                lineno + 1
            )));
        };
        pairs.push((key.trim().to_string(), value.trim().to_string()));
    }
    Ok(pairs)
}

/// Reads and parses a config file.
pub fn parse_config_file(path: &Path) -> Result<Vec<(String, String)>> {
    let text = std::fs::read_to_string(path)?;
    parse_config_text(&text)
}

/// Splits a `--set key=value` argument.
pub fn parse_set_arg(arg: &str) -> Result<(String, String)> {
    let Some((key, value)) = arg.split_once('=') else {
        return Err(Error::config(format!(
            "--set expects key=value, got '{arg}'"
        )));
    };
    Ok((key.trim().to_string(), value.trim().to_string()))
}

fn parse_usize(key: &str, value: &str) -> Result<usize> {
    value
        .parse()
        .map_err(|_| Error::config(format!("{key}: '{value}' is not a nonnegative integer")))
}

fn parse_u64(key: &str, value: &str) -> Result<u64> {
    value
        .parse()
        .map_err(|_| Error::config(format!("{key}: '{value}' is not a nonnegative integer")))
}

fn parse_f64(key: &str, value: &str) -> Result<f64> {
    let v: f64 = value
        .parse()
        .map_err(|_| Error::config(format!("{key}: '{value}' is not a number")))?;
    if !v.is_finite() {
        return Err(Error::config(format!("{key}: '{value}' is not finite")));
    }
    Ok(v)
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" => Ok(true),
        "false" => Ok(false),
        other => Err(Error::config(format!(
            "{key}: '{other}' is not 'true' or 'false'"
        ))),
    }
}

fn parse_usize_list(key: &str, value: &str) -> Result<Vec<usize>> {
    if value.is_empty() {
        return Ok(Vec::new());
    }
    value.split(',').map(|s| parse_usize(key, s.trim())).collect()
}

fn parse_f64_list(key: &str, value: &str) -> Result<Vec<f64>> {
    if value.is_empty() {
        return Err(Error::config(format!("{key}: empty list")));
    }
    value.split(',').map(|s| parse_f64(key, s.trim())).collect()
}

fn parse_path(value: &str) -> Option<PathBuf> {
    if value.is_empty() {
        None
    } else {
        Some(PathBuf::from(value))
    }
}

fn path_str(p: &Option<PathBuf>) -> String {
    p.as_ref()
        .map(|p| p.display().to_string())
        .unwrap_or_default()
}

fn join_usize(v: &[usize]) -> String {
    v.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

fn join_f64(v: &[f64]) -> String {
    v.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(",")
}
