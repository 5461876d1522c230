//! Coverage/width sweeps over a grid of nominal miscoverage levels.

use std::path::Path;

use ndarray::{ArrayView1, ArrayView2};

use crate::conformal::{CalibratedEstimator, Method};

use super::{mae, mpiw, picp, r2, rmse, EvalReport, MetricsError, REPORT_COLUMNS};

/// One (method, alpha) cell of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub method: Method,
    pub alpha: f64,
    pub picp: f64,
    /// `f64::INFINITY` when every interval at this level was infinite.
    pub mpiw: f64,
    pub n_infinite: usize,
    pub r2: f64,
    pub mae: f64,
    pub rmse: f64,
}

impl SweepRow {
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

/// Sweep results: rows grouped by method in grid order, plus the per-method
/// coefficient of determination of PICP against nominal coverage (`None`
/// for single-level grids, where the statistic is undefined).
#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    pub alphas: Vec<f64>,
    pub rows: Vec<SweepRow>,
    pub picp_r2: Vec<(Method, Option<f64>)>,
}

impl SweepTable {
    pub fn rows_for(&self, method: Method) -> impl Iterator<Item = &SweepRow> {
        self.rows.iter().filter(move |r| r.method == method)
    }

    pub fn write_csv(&self, path: &Path) -> Result<(), MetricsError> {
        let mut out = REPORT_COLUMNS.join(",");
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.csv_row().join(","));
            out.push('\n');
        }
        std::fs::write(path, out).map_err(|source| MetricsError::Io {
            path: path.display().to_string(),
            source,
        })
    }
}

fn check_grid(alphas: &[f64]) -> Result<(), MetricsError> {
    if alphas.is_empty() {
        return Err(MetricsError::BadGrid);
    }
    for (i, &a) in alphas.iter().enumerate() {
        if !(a > 0.0 && a < 1.0) || (i > 0 && a <= alphas[i - 1]) {
            return Err(MetricsError::BadGrid);
        }
    }
    Ok(())
}

/// Recalibrate each fitted estimator across the alpha grid and score
/// coverage and width at every level. Base models are evaluated on the
/// test set once per estimator and reused across levels; only the score
/// quantile moves with alpha.
pub fn coverage_sweep(
    estimators: &[&CalibratedEstimator],
    test_x: ArrayView2<'_, f64>,
    test_y: ArrayView1<'_, f64>,
    alphas: &[f64],
) -> Result<SweepTable, MetricsError> {
    check_grid(alphas)?;
    let mut rows = Vec::with_capacity(estimators.len() * alphas.len());
    let mut picp_r2 = Vec::with_capacity(estimators.len());

    for estimator in estimators {
        let preds = estimator.predict(test_x)?;
        let mut picps = Vec::with_capacity(alphas.len());
        for &alpha in alphas {
            let batch = estimator.intervals(&preds, alpha)?;
            let coverage = picp(test_y, &batch)?;
            let (width, n_infinite) = match mpiw(&batch) {
                Ok(pair) => pair,
                Err(MetricsError::AllInfinite) => (f64::INFINITY, batch.len()),
                Err(other) => return Err(other),
            };
            picps.push(coverage);
            rows.push(SweepRow {
                method: estimator.method(),
                alpha,
                picp: coverage,
                mpiw: width,
                n_infinite,
                r2: r2(test_y, batch.point.view())?,
                mae: mae(test_y, batch.point.view())?,
                rmse: rmse(test_y, batch.point.view())?,
            });
        }

        // R^2 of achieved coverage against nominal coverage across the
        // grid; nominal plays the target role.
        let r2_value = if alphas.len() >= 2 {
            let nominal: Vec<f64> = alphas.iter().map(|a| 1.0 - a).collect();
            Some(r2(
                ArrayView1::from(&nominal[..]),
                ArrayView1::from(&picps[..]),
            )?)
        } else {
            None
        };
        picp_r2.push((estimator.method(), r2_value));
    }

    Ok(SweepTable {
        alphas: alphas.to_vec(),
        rows,
        picp_r2,
    })
}

/// Csv export of per-method single-level reports with the fixed column
/// order.
pub fn write_eval_reports_csv(reports: &[EvalReport], path: &Path) -> Result<(), MetricsError> {
    let mut out = REPORT_COLUMNS.join(",");
    out.push('\n');
    for report in reports {
        out.push_str(&report.csv_row().join(","));
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|source| MetricsError::Io {
        path: path.display().to_string(),
        source,
    })
}
