//! Gradient-boosted regression trees with squared-error and pinball
//! losses.
//!
//! The ensemble predicts `base_value + learning_rate * sum(tree outputs)`;
//! shrinkage is applied at evaluation time, leaf values are stored raw.
//! Under squared error each stage fits a tree to the residuals and keeps
//! the in-leaf residual mean. Under pinball loss the tree structure is fit
//! to the loss subgradients and each leaf value is then replaced by the
//! tau-quantile of the in-leaf residuals, the standard correction for a
//! non-smooth objective.

use ndarray::{Array1, ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};
use thiserror::Error;

mod search;
mod tree;

pub use search::{evaluate_cv, random_search_cv, CVScore, SearchSpace};
pub use tree::{Node, RegressionTree};

#[derive(Debug, Error)]
pub enum GbrtError {
    #[error("empty dataset")]
    EmptyDataset,

    #[error("need at least {min} samples, got {n}")]
    TooFewSamples { n: usize, min: usize },

    #[error("invalid boosting parameters: {0}")]
    BadParams(String),

    #[error("pinball level tau must lie strictly inside (0, 1), got {0}")]
    BadTau(f64),

    #[error("feature width {got} does not match training width {expected}")]
    WidthMismatch { expected: usize, got: usize },

    #[error("length mismatch: {left} targets vs {right} predictions")]
    LengthMismatch { left: usize, right: usize },

    #[error("cannot run {folds}-fold cross-validation on {n} samples")]
    TooFewForFolds { n: usize, folds: usize },

    #[error("model file {path}: {message}")]
    ModelFile { path: String, message: String },
}

/// Training objective.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Loss {
    SquaredError,
    Pinball { tau: f64 },
}

impl Loss {
    fn validate(&self) -> Result<(), GbrtError> {
        if let Loss::Pinball { tau } = self {
            if !(*tau > 0.0 && *tau < 1.0) {
                return Err(GbrtError::BadTau(*tau));
            }
        }
        Ok(())
    }
}

/// Boosting hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoostingParams {
    pub learning_rate: f64,
    /// Maximum root-to-leaf depth in edges.
    pub max_depth: usize,
    pub max_leaf_nodes: usize,
    pub n_estimators: usize,
    pub loss: Loss,
    pub seed: u64,
}

impl BoostingParams {
    pub fn validate(&self) -> Result<(), GbrtError> {
        if !(self.learning_rate > 0.0) {
            return Err(GbrtError::BadParams(format!(
                "learning_rate must be > 0, got {}",
                self.learning_rate
            )));
        }
        if self.max_depth < 1 {
            return Err(GbrtError::BadParams("max_depth must be >= 1".into()));
        }
        if self.max_leaf_nodes < 2 {
            return Err(GbrtError::BadParams("max_leaf_nodes must be >= 2".into()));
        }
        if self.n_estimators < 1 {
            return Err(GbrtError::BadParams("n_estimators must be >= 1".into()));
        }
        self.loss.validate()
    }
}

/// An additive ensemble of regression trees.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GBRTModel {
    pub params: BoostingParams,
    pub n_features: usize,
    /// Initial prediction: target mean under squared error, the
    /// tau-quantile of the targets under pinball loss.
    pub base_value: f64,
    pub trees: Vec<RegressionTree>,
}

/// Mean pinball loss at level `tau`:
/// `tau * (y - pred)` when `y >= pred`, `(tau - 1) * (y - pred)` otherwise.
pub fn pinball_loss(
    y: ArrayView1<'_, f64>,
    pred: ArrayView1<'_, f64>,
    tau: f64,
) -> Result<f64, GbrtError> {
    if !(tau > 0.0 && tau < 1.0) {
        return Err(GbrtError::BadTau(tau));
    }
    if y.len() != pred.len() {
        return Err(GbrtError::LengthMismatch {
            left: y.len(),
            right: pred.len(),
        });
    }
    if y.is_empty() {
        return Err(GbrtError::EmptyDataset);
    }
    let sum: f64 = y
        .iter()
        .zip(pred.iter())
        .map(|(&yi, &pi)| {
            let d = yi - pi;
            if d >= 0.0 {
                tau * d
            } else {
                (tau - 1.0) * d
            }
        })
        .sum();
    Ok(sum / y.len() as f64)
}

/// Lower empirical quantile: the `max(1, ceil(tau * n))`-th smallest.
fn lower_quantile(values: &[f64], tau: f64) -> f64 {
    debug_assert!(!values.is_empty());
    let n = values.len();
    // Same float guard as the conformal quantile index.
    let k = ((tau * n as f64 - 1e-9).ceil() as usize).clamp(1, n);
    let mut buf = values.to_vec();
    let (_, v, _) = buf.select_nth_unstable_by(k - 1, f64::total_cmp);
    *v
}

/// Fit a boosted ensemble. Deterministic: equal `(data, params)` produce
/// identical trees.
pub fn fit(
    x: ArrayView2<'_, f64>,
    y: ArrayView1<'_, f64>,
    params: &BoostingParams,
) -> Result<GBRTModel, GbrtError> {
    params.validate()?;
    let n = y.len();
    if n == 0 {
        return Err(GbrtError::EmptyDataset);
    }
    if n < 2 {
        return Err(GbrtError::TooFewSamples { n, min: 2 });
    }

    let all: Vec<f64> = y.to_vec();
    let base_value = match params.loss {
        Loss::SquaredError => all.iter().sum::<f64>() / n as f64,
        Loss::Pinball { tau } => lower_quantile(&all, tau),
    };

    let mut current: Vec<f64> = vec![base_value; n];
    let mut trees = Vec::with_capacity(params.n_estimators);
    let mut gradients = vec![0.0; n];
    let mut residuals = vec![0.0; n];

    for _ in 0..params.n_estimators {
        for i in 0..n {
            residuals[i] = y[i] - current[i];
            gradients[i] = match params.loss {
                Loss::SquaredError => residuals[i],
                Loss::Pinball { tau } => {
                    if residuals[i] >= 0.0 {
                        tau
                    } else {
                        tau - 1.0
                    }
                }
            };
        }

        let (mut tree, leaf_of) = tree::grow(x, &gradients, params.max_depth, params.max_leaf_nodes);

        if let Loss::Pinball { tau } = params.loss {
            // Rewrite each leaf as the tau-quantile of in-leaf residuals.
            let mut members: Vec<Vec<f64>> = vec![Vec::new(); tree.nodes.len()];
            for i in 0..n {
                members[leaf_of[i]].push(residuals[i]);
            }
            for (node, residuals_here) in tree.nodes.iter_mut().zip(&members) {
                if let Node::Leaf { value } = node {
                    if !residuals_here.is_empty() {
                        *value = lower_quantile(residuals_here, tau);
                    }
                }
            }
        }

        for (i, f) in current.iter_mut().enumerate() {
            *f += params.learning_rate * tree.predict_row(x.row(i));
        }
        trees.push(tree);
    }

    Ok(GBRTModel {
        params: *params,
        n_features: x.ncols(),
        base_value,
        trees,
    })
}

impl GBRTModel {
    pub fn predict(&self, x: ArrayView2<'_, f64>) -> Result<Array1<f64>, GbrtError> {
        self.predict_with_stages(x, self.trees.len())
    }

    /// Evaluate only the first `stages` trees.
    pub fn predict_with_stages(
        &self,
        x: ArrayView2<'_, f64>,
        stages: usize,
    ) -> Result<Array1<f64>, GbrtError> {
        if x.ncols() != self.n_features {
            return Err(GbrtError::WidthMismatch {
                expected: self.n_features,
                got: x.ncols(),
            });
        }
        let stages = stages.min(self.trees.len());
        let mut out = Array1::from_elem(x.nrows(), self.base_value);
        for tree in &self.trees[..stages] {
            for (i, row) in x.rows().into_iter().enumerate() {
                out[i] += self.params.learning_rate * tree.predict_row(row);
            }
        }
        Ok(out)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("model is serialisable")
    }

    pub fn from_json(text: &str) -> Result<GBRTModel, GbrtError> {
        serde_json::from_str(text).map_err(|e| GbrtError::ModelFile {
            path: "<inline>".into(),
            message: e.to_string(),
        })
    }

    pub fn save(&self, path: &std::path::Path) -> Result<(), GbrtError> {
        std::fs::write(path, self.to_json()).map_err(|e| GbrtError::ModelFile {
            path: path.display().to_string(),
            message: e.to_string(),
        })
    }

    pub fn load(path: &std::path::Path) -> Result<GBRTModel, GbrtError> {
        let text = std::fs::read_to_string(path).map_err(|e| GbrtError::ModelFile {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        serde_json::from_str(&text).map_err(|e| GbrtError::ModelFile {
            path: path.display().to_string(),
            message: e.to_string(),
        })
    }
}

/// Adapter giving the conformal estimators a GBRT base learner.
#[derive(Debug, Clone)]
pub struct GbrtLearner {
    pub params: BoostingParams,
}

impl GbrtLearner {
    pub fn new(params: BoostingParams) -> GbrtLearner {
        GbrtLearner { params }
    }
}

impl crate::conformal::PointModel for GBRTModel {
    fn predict(&self, features: ArrayView2<'_, f64>) -> Array1<f64> {
        GBRTModel::predict(self, features).expect("feature width is checked by the estimator")
    }
}

impl crate::conformal::PointLearner for GbrtLearner {
    fn fit(
        &self,
        features: ArrayView2<'_, f64>,
        targets: ArrayView1<'_, f64>,
    ) -> Result<Box<dyn crate::conformal::PointModel>, crate::conformal::ConformalError> {
        let model = fit(features, targets, &self.params)
            .map_err(|e| crate::conformal::ConformalError::Base(Box::new(e)))?;
        Ok(Box::new(model))
    }
}

impl crate::conformal::QuantileLearner for GbrtLearner {
    fn fit_at(
        &self,
        tau: f64,
        features: ArrayView2<'_, f64>,
        targets: ArrayView1<'_, f64>,
    ) -> Result<Box<dyn crate::conformal::PointModel>, crate::conformal::ConformalError> {
        let params = BoostingParams {
            loss: Loss::Pinball { tau },
            ..self.params
        };
        let model = fit(features, targets, &params)
            .map_err(|e| crate::conformal::ConformalError::Base(Box::new(e)))?;
        Ok(Box::new(model))
    }
}
