//! Run configuration: one json file per run, validated with field-path
//! diagnostics. Reproducibility policy: everything that affects results
//! lives in this file; the only environment override is the output root
//! (`PIQ_OUT_ROOT` or `--out`).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use piq_core::conformal::{Aggregation, IntervalConfig, Method};
use piq_core::data::QualityCutSpec;
use piq_core::gbrt::{BoostingParams, Loss, SearchSpace};
use piq_core::mlp::MLPConfig;

use crate::CliError;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub dataset: DatasetConfig,
    #[serde(default)]
    pub quality_cuts: Option<CutConfig>,
    pub split: SplitConfig,
    pub features: FeatureStage,
    pub regressor: RegressorSpec,
    /// Separate hyperparameters for the pinball-loss models behind cqr;
    /// defaults to `regressor` when absent.
    #[serde(default)]
    pub quantile_regressor: Option<RegressorSpec>,
    pub methods: Vec<MethodSpec>,
    /// Nominal miscoverage grid for the sweep; omit to skip sweeping.
    #[serde(default)]
    pub alpha_grid: Option<Vec<f64>>,
    pub output_dir: PathBuf,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetConfig {
    pub csv: PathBuf,
    pub schema: PathBuf,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CutConfig {
    /// Emission-line column prefixes; `""` reads unprefixed columns.
    pub lines: Vec<String>,
    #[serde(default = "default_min_flux_snr")]
    pub min_flux_snr: f64,
    #[serde(default = "default_log_lum_range")]
    pub log_lum_range: [f64; 2],
    #[serde(default = "default_min_pixel_snr")]
    pub min_pixel_snr: f64,
    #[serde(default = "default_max_mass_err")]
    pub max_mass_err: f64,
    #[serde(default = "default_max_width_err")]
    pub max_width_err: f64,
}

fn default_min_flux_snr() -> f64 {
    QualityCutSpec::default().min_flux_snr
}
fn default_log_lum_range() -> [f64; 2] {
    QualityCutSpec::default().log_lum_range
}
fn default_min_pixel_snr() -> f64 {
    QualityCutSpec::default().min_pixel_snr
}
fn default_max_mass_err() -> f64 {
    QualityCutSpec::default().max_mass_err
}
fn default_max_width_err() -> f64 {
    QualityCutSpec::default().max_width_err
}

impl CutConfig {
    pub fn spec(&self) -> QualityCutSpec {
        QualityCutSpec {
            min_flux_snr: self.min_flux_snr,
            log_lum_range: self.log_lum_range,
            min_pixel_snr: self.min_pixel_snr,
            max_mass_err: self.max_mass_err,
            max_width_err: self.max_width_err,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitConfig {
    pub fractions: [f64; 3],
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureStage {
    /// Feed the input features straight into the regressor.
    Passthrough,
    /// Train the feature network and regress on its extracted features.
    Mlp(MLPConfig),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegressorSpec {
    Params(BoostingParams),
    Search(SearchConfig),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchConfig {
    #[serde(default)]
    pub space: SearchSpace,
    #[serde(default = "default_folds")]
    pub folds: usize,
    #[serde(default = "default_iters")]
    pub iters: usize,
    #[serde(default = "default_loss")]
    pub loss: Loss,
    #[serde(default)]
    pub seed: u64,
}

fn default_folds() -> usize {
    10
}
fn default_iters() -> usize {
    100
}
fn default_loss() -> Loss {
    Loss::SquaredError
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MethodSpec {
    pub method: String,
    pub alpha: f64,
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default = "default_aggregation")]
    pub aggregation: String,
    #[serde(default)]
    pub seed: u64,
}

fn default_k() -> usize {
    10
}
fn default_aggregation() -> String {
    "mean".to_string()
}

impl MethodSpec {
    pub fn parse(&self) -> Result<IntervalConfig, CliError> {
        let method = Method::parse(&self.method).ok_or_else(|| {
            CliError::Config(format!(
                "methods[].method: unknown method {:?} (expected one of {})",
                self.method,
                Method::ALL
                    .iter()
                    .map(|m| m.name())
                    .collect::<Vec<_>>()
                    .join(", ")
            ))
        })?;
        let aggregation = Aggregation::parse(&self.aggregation).ok_or_else(|| {
            CliError::Config(format!(
                "methods[].aggregation: unknown aggregation {:?} (expected mean or median)",
                self.aggregation
            ))
        })?;
        Ok(IntervalConfig {
            alpha: self.alpha,
            method,
            k: self.k,
            aggregation,
            seed: self.seed,
        })
    }
}

/// Parse and validate a run configuration, reporting the json path of the
/// offending field on failure.
pub fn load_config(path: &Path) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    parse_config(&text)
}

pub fn parse_config(text: &str) -> Result<RunConfig, CliError> {
    let mut deserializer = serde_json::Deserializer::from_str(text);
    let config: RunConfig = serde_path_to_error::deserialize(&mut deserializer)
        .map_err(|e| CliError::Config(format!("{}: {}", e.path(), e.inner())))?;
    validate(&config)?;
    Ok(config)
}

fn fail(path: &str, message: impl AsRef<str>) -> CliError {
    CliError::Config(format!("{path}: {}", message.as_ref()))
}

fn validate(config: &RunConfig) -> Result<(), CliError> {
    let split_sum: f64 = config.split.fractions.iter().sum();
    if (split_sum - 1.0).abs() > 1e-9 {
        return Err(fail(
            "split.fractions",
            format!("must sum to 1, got {split_sum}"),
        ));
    }
    for (i, f) in config.split.fractions.iter().enumerate() {
        if f.is_nan() || *f <= 0.0 {
            return Err(fail(
                &format!("split.fractions[{i}]"),
                "each fraction must be positive",
            ));
        }
    }

    if let Some(cuts) = &config.quality_cuts {
        cuts.spec()
            .validate()
            .map_err(|e| fail("quality_cuts", e.to_string()))?;
    }

    if let FeatureStage::Mlp(mlp) = &config.features {
        mlp.validate().map_err(|e| fail("features.mlp", e.to_string()))?;
    }

    validate_regressor(&config.regressor, "regressor")?;
    if let Some(q) = &config.quantile_regressor {
        validate_regressor(q, "quantile_regressor")?;
    }

    if config.methods.is_empty() {
        return Err(fail("methods", "at least one interval method is required"));
    }
    for (i, spec) in config.methods.iter().enumerate() {
        let parsed = spec
            .parse()
            .map_err(|e| fail(&format!("methods[{i}]"), e.to_string()))?;
        parsed
            .validate()
            .map_err(|e| fail(&format!("methods[{i}]"), e.to_string()))?;
    }

    if let Some(grid) = &config.alpha_grid {
        if grid.is_empty() {
            return Err(fail("alpha_grid", "grid must not be empty"));
        }
        for (i, a) in grid.iter().enumerate() {
            if !(*a > 0.0 && *a < 1.0) {
                return Err(fail(
                    &format!("alpha_grid[{i}]"),
                    "levels must lie strictly inside (0, 1)",
                ));
            }
            if i > 0 && *a <= grid[i - 1] {
                return Err(fail(
                    &format!("alpha_grid[{i}]"),
                    "grid must be strictly increasing",
                ));
            }
        }
    }
    Ok(())
}

fn validate_regressor(spec: &RegressorSpec, path: &str) -> Result<(), CliError> {
    match spec {
        RegressorSpec::Params(params) => params
            .validate()
            .map_err(|e| fail(&format!("{path}.params"), e.to_string())),
        RegressorSpec::Search(search) => {
            if search.folds < 2 {
                return Err(fail(
                    &format!("{path}.search.folds"),
                    "needs at least 2 folds",
                ));
            }
            if search.iters == 0 {
                return Err(fail(
                    &format!("{path}.search.iters"),
                    "needs at least 1 iteration",
                ));
            }
            Ok(())
        }
    }
}
