//! Prediction-interval estimators over any base regressor.
//!
//! Six constructions are provided: a naive training-residual band, the
//! jackknife+-after-bootstrap, K-fold cross-validation in three variants
//! (plain, plus, and min-max), and conformalised quantile regression. Each
//! produces an [`IntervalBatch`] of per-sample `(point, lower, upper)`
//! bounds at a nominal miscoverage `alpha`.
//!
//! The finite-sample empirical quantile follows the `k = ceil((1-alpha)
//! (n+1))`-th order-statistic convention; when `k` exceeds `n` the interval
//! side is an infinite sentinel, which the metrics layer counts separately
//! instead of averaging.

use ndarray::{Array1, ArrayView1, ArrayView2};
use thiserror::Error;

mod estimate;
mod quantile;

pub use estimate::{
    bootstrap_resamples, cv_fold_assignment, fit_conformal, naive_from_model, CalibratedEstimator,
    TestPredictions, TrainingData,
};
pub use quantile::{empirical_quantile_hi, empirical_quantile_lo};

/// Errors from interval construction.
#[derive(Debug, Error)]
pub enum ConformalError {
    #[error("alpha must lie strictly inside (0, 1), got {0}")]
    BadAlpha(f64),

    #[error("empty score vector")]
    EmptyScores,

    #[error("empty training set")]
    EmptyTrainingSet,

    #[error("empty calibration set")]
    EmptyCalibration,

    #[error("{method} requires K >= 2, got {k}")]
    BadFoldCount { method: &'static str, k: usize },

    #[error("cannot split n = {n} samples into K = {k} folds")]
    TooFewSamples { n: usize, k: usize },

    #[error(
        "bootstrap resampling left index {index} in every resample after {budget} redraws; \
         increase K or the retry budget"
    )]
    NeverOmitted { index: usize, budget: usize },

    #[error("feature width {got} does not match training width {expected}")]
    WidthMismatch { expected: usize, got: usize },

    #[error("{method} requires a {need}")]
    MissingLearner {
        method: &'static str,
        need: &'static str,
    },

    #[error("base learner failed: {0}")]
    Base(#[from] Box<dyn std::error::Error + Send + Sync>),
}

/// Interval construction method.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Naive,
    JackknifePlusAb,
    Cv,
    CvPlus,
    CvMinmax,
    Cqr,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::Naive,
        Method::JackknifePlusAb,
        Method::Cv,
        Method::CvPlus,
        Method::CvMinmax,
        Method::Cqr,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Method::Naive => "naive",
            Method::JackknifePlusAb => "jackknife_plus_ab",
            Method::Cv => "cv",
            Method::CvPlus => "cv_plus",
            Method::CvMinmax => "cv_minmax",
            Method::Cqr => "cqr",
        }
    }

    pub fn parse(name: &str) -> Option<Method> {
        Method::ALL.iter().copied().find(|m| m.name() == name)
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// How an out-of-sample ensemble is collapsed to one prediction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Aggregation {
    #[default]
    Mean,
    Median,
}

impl Aggregation {
    pub fn name(&self) -> &'static str {
        match self {
            Aggregation::Mean => "mean",
            Aggregation::Median => "median",
        }
    }

    pub fn parse(name: &str) -> Option<Aggregation> {
        match name {
            "mean" => Some(Aggregation::Mean),
            "median" => Some(Aggregation::Median),
            _ => None,
        }
    }

    fn apply(&self, values: &[f64]) -> f64 {
        debug_assert!(!values.is_empty());
        match self {
            Aggregation::Mean => values.iter().sum::<f64>() / values.len() as f64,
            Aggregation::Median => {
                let mut buf = values.to_vec();
                buf.sort_by(f64::total_cmp);
                let mid = buf.len() / 2;
                if buf.len() % 2 == 1 {
                    buf[mid]
                } else {
                    0.5 * (buf[mid - 1] + buf[mid])
                }
            }
        }
    }
}

/// Configuration for one interval construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntervalConfig {
    /// Nominal miscoverage; the target coverage is `1 - alpha`.
    pub alpha: f64,
    pub method: Method,
    /// Fold count for the CV variants, bootstrap count for jackknife+ab.
    pub k: usize,
    pub aggregation: Aggregation,
    pub seed: u64,
}

impl IntervalConfig {
    pub fn new(method: Method, alpha: f64) -> IntervalConfig {
        IntervalConfig {
            alpha,
            method,
            k: 10,
            aggregation: Aggregation::Mean,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<(), ConformalError> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(ConformalError::BadAlpha(self.alpha));
        }
        match self.method {
            Method::Cv | Method::CvPlus | Method::CvMinmax | Method::JackknifePlusAb
                if self.k < 2 =>
            {
                Err(ConformalError::BadFoldCount {
                    method: self.method.name(),
                    k: self.k,
                })
            }
            _ => Ok(()),
        }
    }
}

/// What a conformity score measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScoreKind {
    /// `|y - prediction|`; never negative.
    AbsoluteResidual,
    /// `max(q_lo - y, y - q_hi)`; negative when both quantiles cover `y`.
    CqrSigned,
}

/// Calibration scores with their interpretation.
#[derive(Debug, Clone, PartialEq)]
pub struct ConformityScores {
    pub scores: Vec<f64>,
    pub kind: ScoreKind,
}

impl ConformityScores {
    pub fn new(scores: Vec<f64>, kind: ScoreKind) -> ConformityScores {
        debug_assert!(
            kind != ScoreKind::AbsoluteResidual || scores.iter().all(|s| *s >= 0.0),
            "absolute residual scores must be non-negative"
        );
        ConformityScores { scores, kind }
    }
}

/// Per-sample prediction intervals at one nominal miscoverage level.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalBatch {
    pub point: Array1<f64>,
    pub lower: Array1<f64>,
    pub upper: Array1<f64>,
    pub alpha: f64,
    pub method: Method,
}

impl IntervalBatch {
    pub fn len(&self) -> usize {
        self.point.len()
    }

    pub fn is_empty(&self) -> bool {
        self.point.is_empty()
    }

    pub fn width(&self, i: usize) -> f64 {
        self.upper[i] - self.lower[i]
    }

    pub fn widths(&self) -> Array1<f64> {
        &self.upper - &self.lower
    }

    /// True when either bound is the infinite sentinel.
    pub fn is_infinite(&self, i: usize) -> bool {
        self.lower[i].is_infinite() || self.upper[i].is_infinite()
    }
}

/// A fitted point-prediction model.
pub trait PointModel {
    fn predict(&self, features: ArrayView2<'_, f64>) -> Array1<f64>;
}

/// A recipe for fitting fresh [`PointModel`]s, used by the resampling
/// estimators to train fold and bootstrap models.
pub trait PointLearner {
    fn fit(
        &self,
        features: ArrayView2<'_, f64>,
        targets: ArrayView1<'_, f64>,
    ) -> Result<Box<dyn PointModel>, ConformalError>;
}

/// A recipe for fitting conditional-quantile models at a requested level.
pub trait QuantileLearner {
    fn fit_at(
        &self,
        tau: f64,
        features: ArrayView2<'_, f64>,
        targets: ArrayView1<'_, f64>,
    ) -> Result<Box<dyn PointModel>, ConformalError>;
}
