//! K-fold evaluation and randomised hyperparameter search.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::metrics;
use crate::util::fold_assignment;

use super::{fit, pinball_loss, BoostingParams, GbrtError, Loss};

// Fold assignment must not replay the configuration-sampling stream.
const FOLD_SEED_SALT: u64 = 0x9e37_79b9_7f4a_7c15;

/// Sampling ranges for the randomised search. Integer ranges are inclusive
/// of both endpoints; `learning_rate` is uniform on the open interval.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct SearchSpace {
    pub learning_rate: (f64, f64),
    pub max_depth: (usize, usize),
    pub max_leaf_nodes: (usize, usize),
    pub n_estimators: (usize, usize),
}

impl Default for SearchSpace {
    fn default() -> Self {
        SearchSpace {
            learning_rate: (0.0, 1.0),
            max_depth: (2, 30),
            max_leaf_nodes: (2, 50),
            n_estimators: (10, 500),
        }
    }
}

impl SearchSpace {
    pub fn contains(&self, p: &BoostingParams) -> bool {
        p.learning_rate > self.learning_rate.0
            && p.learning_rate < self.learning_rate.1
            && (self.max_depth.0..=self.max_depth.1).contains(&p.max_depth)
            && (self.max_leaf_nodes.0..=self.max_leaf_nodes.1).contains(&p.max_leaf_nodes)
            && (self.n_estimators.0..=self.n_estimators.1).contains(&p.n_estimators)
    }

    fn validate(&self) -> Result<(), GbrtError> {
        if self.learning_rate.0 > self.learning_rate.1 {
            return Err(GbrtError::BadParams(
                "learning_rate range is inverted".into(),
            ));
        }
        for (name, (lo, hi)) in [
            ("max_depth", self.max_depth),
            ("max_leaf_nodes", self.max_leaf_nodes),
            ("n_estimators", self.n_estimators),
        ] {
            if lo > hi {
                return Err(GbrtError::BadParams(format!("{name} range is inverted")));
            }
        }
        Ok(())
    }

    /// One draw: learning rate, depth, leaves, stages, in that order.
    fn sample(&self, rng: &mut ChaCha8Rng, loss: Loss, seed: u64) -> BoostingParams {
        let learning_rate = if self.learning_rate.0 == self.learning_rate.1 {
            self.learning_rate.0
        } else {
            loop {
                let u: f64 = rng.gen();
                let v = self.learning_rate.0 + u * (self.learning_rate.1 - self.learning_rate.0);
                if v > self.learning_rate.0 {
                    break v;
                }
            }
        };
        BoostingParams {
            learning_rate,
            max_depth: rng.gen_range(self.max_depth.0..=self.max_depth.1),
            max_leaf_nodes: rng.gen_range(self.max_leaf_nodes.0..=self.max_leaf_nodes.1),
            n_estimators: rng.gen_range(self.n_estimators.0..=self.n_estimators.1),
            loss,
            seed,
        }
    }
}

/// Per-fold held-out errors with their summary statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct CVScore {
    pub fold_mae: Vec<f64>,
    pub fold_rmse: Vec<f64>,
}

impl CVScore {
    pub fn mae_mean(&self) -> f64 {
        mean(&self.fold_mae)
    }

    pub fn mae_std(&self) -> f64 {
        std(&self.fold_mae)
    }

    pub fn rmse_mean(&self) -> f64 {
        mean(&self.fold_rmse)
    }

    pub fn rmse_std(&self) -> f64 {
        std(&self.fold_rmse)
    }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Population standard deviation across folds.
fn std(v: &[f64]) -> f64 {
    let m = mean(v);
    (v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / v.len() as f64).sqrt()
}

fn take_rows(
    x: ArrayView2<'_, f64>,
    y: ArrayView1<'_, f64>,
    rows: &[usize],
) -> (Array2<f64>, Array1<f64>) {
    let xs = Array2::from_shape_fn((rows.len(), x.ncols()), |(i, j)| x[[rows[i], j]]);
    let ys = Array1::from_iter(rows.iter().map(|&i| y[i]));
    (xs, ys)
}

struct FoldOutcome {
    mae: f64,
    rmse: f64,
    selection_loss: f64,
}

fn score_folds(
    x: ArrayView2<'_, f64>,
    y: ArrayView1<'_, f64>,
    params: &BoostingParams,
    fold_of: &[usize],
    folds: usize,
) -> Result<Vec<FoldOutcome>, GbrtError> {
    let n = y.len();
    let mut outcomes = Vec::with_capacity(folds);
    for fold in 0..folds {
        let train_rows: Vec<usize> = (0..n).filter(|&i| fold_of[i] != fold).collect();
        let held_rows: Vec<usize> = (0..n).filter(|&i| fold_of[i] == fold).collect();
        let (train_x, train_y) = take_rows(x, y, &train_rows);
        let (held_x, held_y) = take_rows(x, y, &held_rows);
        let model = fit(train_x.view(), train_y.view(), params)?;
        let preds = model.predict(held_x.view())?;

        let mae = metrics::mae(held_y.view(), preds.view()).expect("fold is nonempty");
        let rmse = metrics::rmse(held_y.view(), preds.view()).expect("fold is nonempty");
        let selection_loss = match params.loss {
            Loss::SquaredError => rmse * rmse,
            Loss::Pinball { tau } => pinball_loss(held_y.view(), preds.view(), tau)?,
        };
        outcomes.push(FoldOutcome {
            mae,
            rmse,
            selection_loss,
        });
    }
    Ok(outcomes)
}

/// K-fold cross-validation of one configuration: MAE and RMSE on each
/// held-out fold. Folds are contiguous chunks of a seeded permutation
/// derived from `params.seed`.
pub fn evaluate_cv(
    x: ArrayView2<'_, f64>,
    y: ArrayView1<'_, f64>,
    params: &BoostingParams,
    folds: usize,
) -> Result<CVScore, GbrtError> {
    params.validate()?;
    let n = y.len();
    if folds < 2 || n < folds {
        return Err(GbrtError::TooFewForFolds { n, folds });
    }
    let fold_of = fold_assignment(n, folds, params.seed ^ FOLD_SEED_SALT);
    let outcomes = score_folds(x, y, params, &fold_of, folds)?;
    Ok(CVScore {
        fold_mae: outcomes.iter().map(|o| o.mae).collect(),
        fold_rmse: outcomes.iter().map(|o| o.rmse).collect(),
    })
}

/// Randomised hyperparameter search: draw `iters` configurations uniformly
/// from `space`, score each by K-fold mean validation loss (squared error
/// or pinball, matching `loss`), and return the argmin with its CVScore.
/// Ties keep the earliest draw. The same fold assignment is reused for
/// every candidate so scores are comparable.
pub fn random_search_cv(
    x: ArrayView2<'_, f64>,
    y: ArrayView1<'_, f64>,
    space: &SearchSpace,
    folds: usize,
    iters: usize,
    loss: Loss,
    seed: u64,
) -> Result<(BoostingParams, CVScore), GbrtError> {
    space.validate()?;
    loss.validate()?;
    if iters == 0 {
        return Err(GbrtError::BadParams("search needs iters >= 1".into()));
    }
    let n = y.len();
    if folds < 2 || n < folds {
        return Err(GbrtError::TooFewForFolds { n, folds });
    }

    let fold_of = fold_assignment(n, folds, seed ^ FOLD_SEED_SALT);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut best: Option<(BoostingParams, CVScore, f64)> = None;
    for _ in 0..iters {
        let candidate = space.sample(&mut rng, loss, seed);
        let outcomes = score_folds(x, y, &candidate, &fold_of, folds)?;
        let mean_loss = mean(
            &outcomes
                .iter()
                .map(|o| o.selection_loss)
                .collect::<Vec<_>>(),
        );
        let better = match &best {
            None => true,
            Some((_, _, incumbent)) => mean_loss < *incumbent,
        };
        if better {
            let score = CVScore {
                fold_mae: outcomes.iter().map(|o| o.mae).collect(),
                fold_rmse: outcomes.iter().map(|o| o.rmse).collect(),
            };
            best = Some((candidate, score, mean_loss));
        }
    }
    let (params, score, _) = best.expect("iters >= 1 guarantees a candidate");
    Ok((params, score))
}
