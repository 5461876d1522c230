//! The end-to-end pipeline: ingest -> cuts -> split -> normalise ->
//! features -> regressor -> intervals -> evaluation, with exclusive
//! ownership of the output directory and a manifest either way.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use ndarray::{Array1, Array2};

use piq_core::conformal::{fit_conformal, CalibratedEstimator, IntervalBatch, TrainingData};
use piq_core::data::{
    apply_quality_cuts, load_csv, normalize, normalize_with, split, NormalizationState, Schema,
};
use piq_core::gbrt::{random_search_cv, BoostingParams, GbrtLearner};
use piq_core::metrics::{
    coverage_sweep, width_property_report, write_eval_reports_csv, write_width_report_csv,
    EvalReport, SweepTable, REPORT_COLUMNS,
};
use piq_core::mlp::{extract, train as train_mlp, MLPModel};

use crate::config::{FeatureStage, RegressorSpec, RunConfig};
use crate::manifest::{conventions, sha256_file, IngestStats, InputHashes, RunManifest, Seeds};
use crate::CliError;

pub const LOCK_FILE: &str = ".piq.lock";
pub const REPORT_FILE: &str = "report.csv";
pub const SWEEP_FILE: &str = "sweep.csv";

/// Command-line overrides applied on top of the config file.
#[derive(Debug, Default, Clone)]
pub struct Overrides {
    /// Replaces every configured seed.
    pub seed: Option<u64>,
    /// Replaces the configured output directory.
    pub out: Option<PathBuf>,
}

pub struct RunOutcome {
    pub output_dir: PathBuf,
    pub reports: Vec<EvalReport>,
    pub swept_levels: usize,
}

/// Exclusive claim on the output directory for the duration of a run.
struct DirLock {
    path: PathBuf,
}

impl DirLock {
    fn acquire(dir: &Path) -> Result<DirLock, CliError> {
        std::fs::create_dir_all(dir)
            .map_err(|e| CliError::Data(format!("cannot create {}: {e}", dir.display())))?;
        let path = dir.join(LOCK_FILE);
        match std::fs::OpenOptions::new()
            .write(true)
            .create_new(true)
            .open(&path)
        {
            Ok(_) => Ok(DirLock { path }),
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => Err(CliError::Data(
                format!(
                    "output directory is locked by another run ({}); remove the stale lock if \
                     no run is active",
                    path.display()
                ),
            )),
            Err(e) => Err(CliError::Data(format!(
                "cannot lock {}: {e}",
                path.display()
            ))),
        }
    }
}

impl Drop for DirLock {
    fn drop(&mut self) {
        let _ = std::fs::remove_file(&self.path);
    }
}

struct StageClock {
    current: Option<(String, Instant)>,
    seconds: BTreeMap<String, f64>,
}

impl StageClock {
    fn new() -> StageClock {
        StageClock {
            current: None,
            seconds: BTreeMap::new(),
        }
    }

    fn begin(&mut self, stage: &str) {
        self.finish();
        self.current = Some((stage.to_string(), Instant::now()));
    }

    fn finish(&mut self) {
        if let Some((stage, started)) = self.current.take() {
            self.seconds.insert(stage, started.elapsed().as_secs_f64());
        }
    }

    fn stage_name(&self) -> String {
        self.current
            .as_ref()
            .map(|(s, _)| s.clone())
            .unwrap_or_else(|| "setup".to_string())
    }
}

pub fn cmd_run(config_path: &Path, overrides: &Overrides) -> Result<RunOutcome, CliError> {
    let mut config = crate::config::load_config(config_path)?;
    if let Some(seed) = overrides.seed {
        apply_seed_override(&mut config, seed);
    }
    let output_dir = overrides
        .out
        .clone()
        .or_else(|| std::env::var_os("PIQ_OUT_ROOT").map(PathBuf::from))
        .unwrap_or_else(|| config.output_dir.clone());

    let _lock = DirLock::acquire(&output_dir)?;
    let mut manifest = RunManifest {
        version: env!("CARGO_PKG_VERSION").to_string(),
        status: "running".to_string(),
        inputs: InputHashes {
            config_sha256: sha256_file(config_path)?,
            csv_sha256: sha256_file(&config.dataset.csv)?,
            schema_sha256: sha256_file(&config.dataset.schema)?,
        },
        seeds: Seeds {
            split: config.split.seed,
            mlp: match &config.features {
                FeatureStage::Mlp(mlp) => Some(mlp.seed),
                FeatureStage::Passthrough => None,
            },
            search: match &config.regressor {
                RegressorSpec::Search(s) => Some(s.seed),
                RegressorSpec::Params(_) => None,
            },
            methods: config
                .methods
                .iter()
                .map(|m| (format!("{}@{}", m.method, m.alpha), m.seed))
                .collect(),
        },
        stage_seconds: BTreeMap::new(),
        resolved_regressor: None,
        resolved_quantile_regressor: None,
        sweep_picp_r2: BTreeMap::new(),
        conventions: conventions(),
        ingest: IngestStats::default(),
    };

    let mut clock = StageClock::new();
    let result = execute(&config, &output_dir, &mut manifest, &mut clock);
    let failing_stage = clock.stage_name();
    clock.finish();
    manifest.stage_seconds = clock.seconds.clone();

    match result {
        Ok(outcome) => {
            manifest.status = "complete".to_string();
            manifest.save(&output_dir)?;
            Ok(outcome)
        }
        Err(e) => {
            // Keep the manifest as a debugging record, drop partial
            // outputs.
            manifest.status = format!("failed: {failing_stage}: {e}");
            let _ = manifest.save(&output_dir);
            remove_partial_outputs(&output_dir);
            Err(e)
        }
    }
}

fn apply_seed_override(config: &mut RunConfig, seed: u64) {
    config.split.seed = seed;
    if let FeatureStage::Mlp(mlp) = &mut config.features {
        mlp.seed = seed;
    }
    for spec in [&mut config.regressor]
        .into_iter()
        .chain(config.quantile_regressor.as_mut())
    {
        match spec {
            RegressorSpec::Params(p) => p.seed = seed,
            RegressorSpec::Search(s) => s.seed = seed,
        }
    }
    for method in &mut config.methods {
        method.seed = seed;
    }
}

fn remove_partial_outputs(dir: &Path) {
    let Ok(entries) = std::fs::read_dir(dir) else {
        return;
    };
    for entry in entries.flatten() {
        let name = entry.file_name().to_string_lossy().to_string();
        if name.ends_with(".csv") {
            let _ = std::fs::remove_file(entry.path());
        }
    }
}

fn execute(
    config: &RunConfig,
    output_dir: &Path,
    manifest: &mut RunManifest,
    clock: &mut StageClock,
) -> Result<RunOutcome, CliError> {
    clock.begin("load");
    let schema = Schema::load(&config.dataset.schema)?;
    let (mut dataset, ingest) = load_csv(&config.dataset.csv, &schema)?;
    manifest.ingest.rows_read = ingest.rows_read;
    manifest.ingest.rows_dropped_nonfinite = ingest.rows_dropped_nonfinite;
    if let Some(cuts) = &config.quality_cuts {
        let lines: Vec<&str> = cuts.lines.iter().map(String::as_str).collect();
        let (filtered, stages) = apply_quality_cuts(&dataset, &cuts.spec(), &lines)?;
        manifest.ingest.cut_survivors = stages
            .iter()
            .map(|s| (s.label.clone(), s.survivors))
            .collect();
        dataset = filtered;
    }
    manifest.ingest.n_after_ingest = dataset.n_samples();

    clock.begin("prepare");
    let indices = split(dataset.n_samples(), config.split.fractions, config.split.seed)?;
    let train_raw = dataset.subset(&indices.train);
    let cal_raw = dataset.subset(&indices.calibration);
    let test_raw = dataset.subset(&indices.test);
    let (train_set, norm_state) = normalize(&train_raw)?;
    let cal_set = normalize_with(&cal_raw, &norm_state)?;
    let test_set = normalize_with(&test_raw, &norm_state)?;

    clock.begin("features");
    let (train_x, cal_x, test_x) = match &config.features {
        FeatureStage::Passthrough => (
            train_set.features.clone(),
            cal_set.features.clone(),
            test_set.features.clone(),
        ),
        FeatureStage::Mlp(mlp_config) => {
            let model = MLPModel::init(mlp_config)?;
            let (model, _trace) = train_mlp(
                model,
                train_set.features.view(),
                train_set.targets.view(),
                cal_set.features.view(),
                cal_set.targets.view(),
            )?;
            model
                .save(&output_dir.join("mlp_checkpoint.json"))
                .map_err(|e| CliError::Data(e.to_string()))?;
            (
                extract(&model, train_set.features.view())?,
                extract(&model, cal_set.features.view())?,
                extract(&model, test_set.features.view())?,
            )
        }
    };

    clock.begin("regressor");
    let point_params = resolve_regressor(&config.regressor, &train_x, &train_set.targets)?;
    manifest.resolved_regressor = Some(point_params);
    let quantile_params = match &config.quantile_regressor {
        Some(spec) => {
            let params = resolve_regressor(spec, &train_x, &train_set.targets)?;
            manifest.resolved_quantile_regressor = Some(params);
            params
        }
        None => point_params,
    };
    let point_learner = GbrtLearner::new(point_params);
    let quantile_learner = GbrtLearner::new(quantile_params);

    clock.begin("intervals");
    let mut estimators: Vec<(CalibratedEstimator, f64)> = Vec::new();
    for spec in &config.methods {
        let cfg = spec.parse()?;
        let estimator = fit_conformal(
            &cfg,
            TrainingData::new(train_x.view(), train_set.targets.view()),
            Some(TrainingData::new(cal_x.view(), cal_set.targets.view())),
            Some(&point_learner),
            Some(&quantile_learner),
        )?;
        estimators.push((estimator, cfg.alpha));
    }

    clock.begin("evaluate");
    let test_y_original = test_raw.targets.clone();
    let mut reports = Vec::new();
    for (estimator, alpha) in &estimators {
        let batch = estimator.predict_intervals(test_x.view(), *alpha)?;
        let batch = denormalize_batch(&batch, &norm_state);
        write_intervals_csv(&batch, &test_set.ids, output_dir)?;

        let report = EvalReport::compute(test_y_original.view(), &batch)?;
        reports.push(report);

        let properties: Vec<&str> = test_raw.metadata.keys().map(String::as_str).collect();
        if !properties.is_empty() {
            let rows = width_property_report(&batch, &test_raw.metadata, &properties)?;
            write_width_report_csv(
                &rows,
                &output_dir.join(format!("width_{}.csv", estimator.method().name())),
            )?;
        }
    }
    write_eval_reports_csv(&reports, &output_dir.join(REPORT_FILE))?;

    let mut swept_levels = 0;
    if let Some(grid) = &config.alpha_grid {
        // One sweep entry per distinct method, first config wins.
        let mut seen = Vec::new();
        let mut sweep_refs: Vec<&CalibratedEstimator> = Vec::new();
        for (estimator, _) in &estimators {
            if !seen.contains(&estimator.method()) {
                seen.push(estimator.method());
                sweep_refs.push(estimator);
            }
        }
        let table = coverage_sweep(&sweep_refs, test_x.view(), test_set.targets.view(), grid)?;
        let table = denormalize_sweep(table, &norm_state);
        table.write_csv(&output_dir.join(SWEEP_FILE))?;
        for (method, r2) in &table.picp_r2 {
            if let Some(r2) = r2 {
                manifest.sweep_picp_r2.insert(method.name().to_string(), *r2);
            }
        }
        swept_levels = grid.len();
    }

    Ok(RunOutcome {
        output_dir: output_dir.to_path_buf(),
        reports,
        swept_levels,
    })
}

fn resolve_regressor(
    spec: &RegressorSpec,
    features: &Array2<f64>,
    targets: &Array1<f64>,
) -> Result<BoostingParams, CliError> {
    match spec {
        RegressorSpec::Params(params) => Ok(*params),
        RegressorSpec::Search(search) => {
            let (params, _score) = random_search_cv(
                features.view(),
                targets.view(),
                &search.space,
                search.folds,
                search.iters,
                search.loss,
                search.seed,
            )?;
            Ok(params)
        }
    }
}

/// Map a batch from normalised target space back to original units. The
/// map is affine increasing, so interval ordering and coverage are
/// untouched.
fn denormalize_batch(batch: &IntervalBatch, state: &NormalizationState) -> IntervalBatch {
    IntervalBatch {
        point: batch.point.mapv(|v| state.denorm_target(v)),
        lower: batch.lower.mapv(|v| state.denorm_target(v)),
        upper: batch.upper.mapv(|v| state.denorm_target(v)),
        alpha: batch.alpha,
        method: batch.method,
    }
}

/// Rescale sweep rows to original target units: widths and point errors
/// scale by the target range; picp and r2 are affine-invariant.
fn denormalize_sweep(mut table: SweepTable, state: &NormalizationState) -> SweepTable {
    let scale = state.target_range.max - state.target_range.min;
    for row in &mut table.rows {
        row.mpiw *= scale;
        row.mae *= scale;
        row.rmse *= scale;
    }
    table
}

fn write_intervals_csv(
    batch: &IntervalBatch,
    ids: &[String],
    dir: &Path,
) -> Result<(), CliError> {
    let path = dir.join(format!(
        "intervals_{}_{}.csv",
        batch.method.name(),
        batch.alpha
    ));
    let mut out = String::from("id,point,lower,upper,alpha,method\n");
    for (i, id) in ids.iter().enumerate().take(batch.len()) {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            id,
            batch.point[i],
            batch.lower[i],
            batch.upper[i],
            batch.alpha,
            batch.method.name()
        ));
    }
    std::fs::write(&path, out)
        .map_err(|e| CliError::Data(format!("cannot write {}: {e}", path.display())))
}

/// Column order used by `report.csv` and `sweep.csv`.
pub fn report_columns() -> &'static [&'static str] {
    &REPORT_COLUMNS
}
