//! Shared fixtures for the acceptance criteria: replicable stub learners
//! and dataset slicing helpers.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use piq_core::conformal::{ConformalError, PointLearner, PointModel, QuantileLearner};
use piq_core::data::Dataset;

/// 1-nearest-neighbour model plus a constant shift. Exactly replicable in
/// oracle code: squared Euclidean distance, ties resolved to the lowest
/// training row index.
pub struct NnModel {
    pub train_x: Array2<f64>,
    pub train_y: Array1<f64>,
    pub shift: f64,
}

impl NnModel {
    pub fn predict_one(&self, row: ArrayView1<'_, f64>) -> f64 {
        let mut best = 0usize;
        let mut best_d = f64::INFINITY;
        for i in 0..self.train_x.nrows() {
            let d: f64 = self
                .train_x
                .row(i)
                .iter()
                .zip(row.iter())
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            if d < best_d {
                best_d = d;
                best = i;
            }
        }
        self.train_y[best] + self.shift
    }
}

impl PointModel for NnModel {
    fn predict(&self, features: ArrayView2<'_, f64>) -> Array1<f64> {
        Array1::from_shape_fn(features.nrows(), |j| self.predict_one(features.row(j)))
    }
}

/// Fits [`NnModel`]s; the quantile flavour adds a `tau - 0.5` shift so the
/// two CQR quantile models differ deterministically.
pub struct NnLearner;

impl PointLearner for NnLearner {
    fn fit(
        &self,
        features: ArrayView2<'_, f64>,
        targets: ArrayView1<'_, f64>,
    ) -> Result<Box<dyn PointModel>, ConformalError> {
        Ok(Box::new(NnModel {
            train_x: features.to_owned(),
            train_y: targets.to_owned(),
            shift: 0.0,
        }))
    }
}

impl QuantileLearner for NnLearner {
    fn fit_at(
        &self,
        tau: f64,
        features: ArrayView2<'_, f64>,
        targets: ArrayView1<'_, f64>,
    ) -> Result<Box<dyn PointModel>, ConformalError> {
        Ok(Box::new(NnModel {
            train_x: features.to_owned(),
            train_y: targets.to_owned(),
            shift: tau - 0.5,
        }))
    }
}

/// Contiguous row blocks of a dataset as (features, targets) pairs.
pub fn blocks(d: &Dataset, sizes: &[usize]) -> Vec<(Array2<f64>, Array1<f64>)> {
    let mut out = Vec::with_capacity(sizes.len());
    let mut start = 0usize;
    for &size in sizes {
        let rows: Vec<usize> = (start..start + size).collect();
        let sub = d.subset(&rows);
        out.push((sub.features, sub.targets));
        start += size;
    }
    assert_eq!(start, d.n_samples(), "blocks must cover the dataset");
    out
}

/// Metadata column values over a contiguous block.
pub fn metadata_block(d: &Dataset, column: &str, start: usize, len: usize) -> Array1<f64> {
    let col = &d.metadata[column];
    Array1::from_iter((start..start + len).map(|i| col[i]))
}
