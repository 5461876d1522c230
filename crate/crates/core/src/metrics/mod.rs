//! Coverage and width evaluation of prediction intervals, plus the point
//! metrics used to score regressors.

use ndarray::ArrayView1;
use thiserror::Error;

use crate::conformal::{ConformalError, IntervalBatch, Method};

mod correlation;
mod sweep;

pub use correlation::{
    spearman, width_property_report, write_width_report_csv, PropertyCorrelation, RankCorrelation,
};
pub use sweep::{coverage_sweep, write_eval_reports_csv, SweepRow, SweepTable};

/// Fixed column order for report and sweep csv files.
pub const REPORT_COLUMNS: [&str; 9] = [
    "method",
    "alpha",
    "picp",
    "picp_minus_nominal",
    "mpiw",
    "n_infinite",
    "r2",
    "mae",
    "rmse",
];

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("length mismatch: {left} targets vs {right} predictions")]
    LengthMismatch { left: usize, right: usize },

    #[error("empty input")]
    EmptyInput,

    #[error("need at least {min} samples, got {n}")]
    TooFewSamples { n: usize, min: usize },

    #[error("{what} is constant; the statistic is undefined")]
    ConstantInput { what: &'static str },

    #[error("every interval in the batch is infinite")]
    AllInfinite,

    #[error("metadata column {column:?} is missing")]
    MissingColumn { column: String },

    #[error("alpha grid must be strictly increasing inside (0, 1)")]
    BadGrid,

    #[error(transparent)]
    Conformal(#[from] ConformalError),

    #[error("failed to write {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

fn check_lengths(y: ArrayView1<'_, f64>, yhat: ArrayView1<'_, f64>) -> Result<(), MetricsError> {
    if y.len() != yhat.len() {
        return Err(MetricsError::LengthMismatch {
            left: y.len(),
            right: yhat.len(),
        });
    }
    if y.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    Ok(())
}

/// Mean absolute error.
pub fn mae(y: ArrayView1<'_, f64>, yhat: ArrayView1<'_, f64>) -> Result<f64, MetricsError> {
    check_lengths(y, yhat)?;
    let sum: f64 = y.iter().zip(yhat.iter()).map(|(a, b)| (a - b).abs()).sum();
    Ok(sum / y.len() as f64)
}

/// Root mean squared error.
pub fn rmse(y: ArrayView1<'_, f64>, yhat: ArrayView1<'_, f64>) -> Result<f64, MetricsError> {
    check_lengths(y, yhat)?;
    let sum: f64 = y
        .iter()
        .zip(yhat.iter())
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    Ok((sum / y.len() as f64).sqrt())
}

/// Coefficient of determination `1 - sum((y - yhat)^2) / sum((y - mean)^2)`.
pub fn r2(y: ArrayView1<'_, f64>, yhat: ArrayView1<'_, f64>) -> Result<f64, MetricsError> {
    check_lengths(y, yhat)?;
    if y.len() < 2 {
        return Err(MetricsError::TooFewSamples { n: y.len(), min: 2 });
    }
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let ss_tot: f64 = y.iter().map(|v| (v - mean) * (v - mean)).sum();
    if ss_tot == 0.0 {
        return Err(MetricsError::ConstantInput { what: "target" });
    }
    let ss_res: f64 = y
        .iter()
        .zip(yhat.iter())
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    Ok(1.0 - ss_res / ss_tot)
}

/// Prediction interval coverage probability: the fraction of targets with
/// `lower <= y <= upper` (closed bounds, so infinite sentinel intervals
/// count as covering).
pub fn picp(y: ArrayView1<'_, f64>, intervals: &IntervalBatch) -> Result<f64, MetricsError> {
    if y.len() != intervals.len() {
        return Err(MetricsError::LengthMismatch {
            left: y.len(),
            right: intervals.len(),
        });
    }
    if y.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    let covered = y
        .iter()
        .enumerate()
        .filter(|(i, &v)| intervals.lower[*i] <= v && v <= intervals.upper[*i])
        .count();
    Ok(covered as f64 / y.len() as f64)
}

/// Mean prediction interval width over the finite intervals, with the
/// number of infinite-sentinel intervals reported separately so they do
/// not poison the mean. Errors when the batch has no finite interval.
pub fn mpiw(intervals: &IntervalBatch) -> Result<(f64, usize), MetricsError> {
    if intervals.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    let mut sum = 0.0;
    let mut finite = 0usize;
    let mut infinite = 0usize;
    for i in 0..intervals.len() {
        if intervals.is_infinite(i) {
            infinite += 1;
        } else {
            sum += intervals.width(i);
            finite += 1;
        }
    }
    if finite == 0 {
        return Err(MetricsError::AllInfinite);
    }
    Ok((sum / finite as f64, infinite))
}

/// Full scoring of one interval batch against test targets: coverage,
/// width, and the point-prediction errors of the batch's centre.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub method: Method,
    pub alpha: f64,
    pub picp: f64,
    pub mpiw: f64,
    pub n_infinite: usize,
    /// Coefficient of determination of the point predictions.
    pub r2: f64,
    pub mae: f64,
    pub rmse: f64,
}

impl EvalReport {
    pub fn compute(y: ArrayView1<'_, f64>, intervals: &IntervalBatch) -> Result<EvalReport, MetricsError> {
        let (mpiw_value, n_infinite) = mpiw(intervals)?;
        Ok(EvalReport {
            method: intervals.method,
            alpha: intervals.alpha,
            picp: picp(y, intervals)?,
            mpiw: mpiw_value,
            n_infinite,
            r2: r2(y, intervals.point.view())?,
            mae: mae(y, intervals.point.view())?,
            rmse: rmse(y, intervals.point.view())?,
        })
    }

    pub fn picp_minus_nominal(&self) -> f64 {
        self.picp - (1.0 - self.alpha)
    }

    pub fn csv_row(&self) -> [String; 9] {
        [
            self.method.name().to_string(),
            format!("{}", self.alpha),
            format!("{}", self.picp),
            format!("{}", self.picp_minus_nominal()),
            format!("{}", self.mpiw),
            format!("{}", self.n_infinite),
            format!("{}", self.r2),
            format!("{}", self.mae),
            format!("{}", self.rmse),
        ]
    }
}
