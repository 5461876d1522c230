//! Tabular ingestion, quality cuts, normalisation, deterministic splitting,
//! virial-mass arithmetic, and synthetic benchmark generation.

use indexmap::IndexMap;
use ndarray::{Array1, Array2};
use thiserror::Error;

mod csv_io;
mod cuts;
mod normalize;
mod schema;
mod split;
mod synth;
mod virial;

pub use csv_io::{load_csv, write_csv, write_schema, IngestReport};
pub use cuts::{apply_quality_cuts, CutStage, QualityCutSpec};
pub use normalize::{denormalize, normalize, normalize_with, ColumnRange, NormalizationState};
pub use schema::{ColumnRole, Schema};
pub use split::{split, SplitIndices};
pub use synth::{synth_heteroscedastic, NoiseLaw};
pub use virial::{virial_log_mass, VirialCoefficients};

/// Errors from the data layer.
#[derive(Debug, Error)]
pub enum DataError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error in {path}: {source}")]
    Csv {
        path: String,
        #[source]
        source: csv::Error,
    },

    #[error("schema column {column:?} not present in the csv header")]
    MissingSchemaColumn { column: String },

    #[error("schema names no feature columns")]
    NoFeatureColumns,

    #[error("schema must name exactly one target column, found {count}")]
    TargetCount { count: usize },

    #[error("unknown column role {role:?} (expected feature, target, metadata:<name> or id)")]
    UnknownRole { role: String },

    #[error("cannot parse {value:?} as a number at data row {row}, column {column:?}")]
    ParseCell {
        row: usize,
        column: String,
        value: String,
    },

    #[error("metadata column {column:?} required by a quality cut is absent")]
    MissingMetadata { column: String },

    #[error("invalid quality cut spec: {0}")]
    BadCutSpec(String),

    #[error("column {column:?} is constant (zero range); cannot normalise")]
    ConstantColumn { column: String },

    #[error("normalisation state has {expected} feature ranges but dataset has {got} features")]
    RangeCount { expected: usize, got: usize },

    #[error("split fractions sum to {sum}, expected 1")]
    BadFractions { sum: f64 },

    #[error("n = {n} is too small: the {split} split would receive no samples")]
    SplitTooSmall { n: usize, split: &'static str },

    #[error("fwhm must be positive, got {fwhm}")]
    NonPositiveFwhm { fwhm: f64 },

    #[error("synthetic dataset needs n >= 1")]
    EmptySynth,

    #[error("noise law scale must be non-negative, got {0}")]
    NegativeNoiseScale(f64),

    #[error("unknown noise law {0:?} (expected constant, linear or sinusoidal)")]
    UnknownNoiseLaw(String),
}

/// A feature matrix with targets, optional named metadata columns, and
/// opaque per-row identifiers.
///
/// Every column shares the same number of rows. Feature and target entries
/// are finite after ingestion; metadata entries may be NaN, which the
/// quality cuts treat as "value not available".
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub feature_names: Vec<String>,
    /// n_samples x n_features, row major.
    pub features: Array2<f64>,
    pub target_name: String,
    pub targets: Array1<f64>,
    /// Auxiliary per-row columns (luminosities, line widths, error bars...)
    /// used by quality cuts and width-property correlations.
    pub metadata: IndexMap<String, Array1<f64>>,
    pub ids: Vec<String>,
}

impl Dataset {
    pub fn n_samples(&self) -> usize {
        self.targets.len()
    }

    pub fn n_features(&self) -> usize {
        self.features.ncols()
    }

    /// Row subset in the given index order.
    pub fn subset(&self, rows: &[usize]) -> Dataset {
        let features = Array2::from_shape_fn((rows.len(), self.n_features()), |(i, j)| {
            self.features[[rows[i], j]]
        });
        let targets = Array1::from_iter(rows.iter().map(|&r| self.targets[r]));
        let metadata = self
            .metadata
            .iter()
            .map(|(name, col)| {
                let sub = Array1::from_iter(rows.iter().map(|&r| col[r]));
                (name.clone(), sub)
            })
            .collect();
        let ids = rows.iter().map(|&r| self.ids[r].clone()).collect();
        Dataset {
            feature_names: self.feature_names.clone(),
            features,
            target_name: self.target_name.clone(),
            targets,
            metadata,
            ids,
        }
    }

    /// The schema describing this dataset's own column layout, suitable for
    /// reloading a table produced by [`write_csv`].
    pub fn schema(&self) -> Schema {
        let mut roles = IndexMap::new();
        roles.insert("id".to_string(), ColumnRole::Id);
        for name in &self.feature_names {
            roles.insert(name.clone(), ColumnRole::Feature);
        }
        roles.insert(self.target_name.clone(), ColumnRole::Target);
        for name in self.metadata.keys() {
            roles.insert(name.clone(), ColumnRole::Metadata(name.clone()));
        }
        Schema { roles }
    }

    pub fn metadata_column(&self, name: &str) -> Result<&Array1<f64>, DataError> {
        self.metadata.get(name).ok_or_else(|| DataError::MissingMetadata {
            column: name.to_string(),
        })
    }
}
