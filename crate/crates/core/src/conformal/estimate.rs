//! Fitting and calibration of the six interval constructions.
//!
//! [`fit_conformal`] trains whatever base models a method needs and freezes
//! the conformity scores. The resulting [`CalibratedEstimator`] can then
//! produce intervals for any test set, and -- because the scores and models
//! are alpha-independent for every method once fitted -- it can be
//! recalibrated to a different nominal level without refitting, which is
//! what the coverage sweep relies on. For CQR the two quantile models stay
//! at the levels chosen at fit time; recalibration only moves the
//! conformity margin, which keeps the split-conformal guarantee intact for
//! any fixed pair of quantile functions.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::util::fold_assignment;

use super::quantile::{kth_smallest, quantile_index};
use super::{
    Aggregation, ConformalError, ConformityScores, IntervalBatch, IntervalConfig, Method,
    PointLearner, PointModel, QuantileLearner, ScoreKind,
};

/// Borrowed feature/target pair.
#[derive(Clone, Copy)]
pub struct TrainingData<'a> {
    pub features: ArrayView2<'a, f64>,
    pub targets: ArrayView1<'a, f64>,
}

impl<'a> TrainingData<'a> {
    pub fn new(features: ArrayView2<'a, f64>, targets: ArrayView1<'a, f64>) -> Self {
        TrainingData { features, targets }
    }

    fn len(&self) -> usize {
        self.targets.len()
    }

    fn rows(&self, indices: &[usize]) -> (Array2<f64>, Array1<f64>) {
        let x = Array2::from_shape_fn((indices.len(), self.features.ncols()), |(i, j)| {
            self.features[[indices[i], j]]
        });
        let y = Array1::from_iter(indices.iter().map(|&i| self.targets[i]));
        (x, y)
    }
}

enum State {
    Naive {
        model: Box<dyn PointModel>,
    },
    Jackknife {
        models: Vec<Box<dyn PointModel>>,
        /// For each training index, the models whose bootstrap omits it.
        omitting: Vec<Vec<usize>>,
        aggregation: Aggregation,
    },
    Cv {
        /// Fit on the whole training set; present for the plain CV variant.
        full_model: Option<Box<dyn PointModel>>,
        fold_models: Vec<Box<dyn PointModel>>,
        /// Training index -> fold holding it out.
        fold_of: Vec<usize>,
    },
    Cqr {
        lower_model: Box<dyn PointModel>,
        upper_model: Box<dyn PointModel>,
    },
}

/// A fitted interval estimator: base models plus frozen conformity scores.
pub struct CalibratedEstimator {
    method: Method,
    n_features: usize,
    scores: ConformityScores,
    state: State,
}

/// Alpha-independent model evaluations on one test set, reusable across
/// nominal levels.
pub struct TestPredictions {
    n: usize,
    inner: PredsInner,
}

enum PredsInner {
    /// One point prediction per test row (naive, cv).
    Point { point: Array1<f64> },
    /// Per fold-model predictions, K x n_test (cv_plus, cv_minmax).
    Folds {
        fold_preds: Array2<f64>,
        point: Array1<f64>,
    },
    /// Per bootstrap-model predictions, K x n_test (jackknife+ab).
    Ensemble {
        model_preds: Array2<f64>,
        point: Array1<f64>,
    },
    /// Swapped quantile-model predictions (cqr).
    Quantiles { lo: Array1<f64>, hi: Array1<f64> },
}

impl TestPredictions {
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }
}

/// Train base models and freeze conformity scores for `cfg.method`.
///
/// `calibration` and `quantile_learner` are required by CQR and ignored by
/// every other method; the remaining methods calibrate on `train` itself.
pub fn fit_conformal(
    cfg: &IntervalConfig,
    train: TrainingData<'_>,
    calibration: Option<TrainingData<'_>>,
    learner: Option<&dyn PointLearner>,
    quantile_learner: Option<&dyn QuantileLearner>,
) -> Result<CalibratedEstimator, ConformalError> {
    cfg.validate()?;
    if train.len() == 0 {
        return Err(ConformalError::EmptyTrainingSet);
    }
    let n_features = train.features.ncols();

    fn need_point(
        learner: Option<&dyn PointLearner>,
        method: Method,
    ) -> Result<&dyn PointLearner, ConformalError> {
        learner.ok_or(ConformalError::MissingLearner {
            method: method.name(),
            need: "point learner",
        })
    }

    match cfg.method {
        Method::Naive => {
            let learner = need_point(learner, cfg.method)?;
            let model = learner.fit(train.features, train.targets)?;
            let preds = model.predict(train.features);
            let scores: Vec<f64> = train
                .targets
                .iter()
                .zip(preds.iter())
                .map(|(y, p)| (y - p).abs())
                .collect();
            Ok(CalibratedEstimator {
                method: Method::Naive,
                n_features,
                scores: ConformityScores::new(scores, ScoreKind::AbsoluteResidual),
                state: State::Naive { model },
            })
        }
        Method::JackknifePlusAb => {
            fit_jackknife(cfg, train, need_point(learner, cfg.method)?, n_features)
        }
        Method::Cv | Method::CvPlus | Method::CvMinmax => {
            fit_cv(cfg, train, need_point(learner, cfg.method)?, n_features)
        }
        Method::Cqr => {
            let ql = quantile_learner.ok_or(ConformalError::MissingLearner {
                method: "cqr",
                need: "quantile learner",
            })?;
            let cal = calibration.ok_or(ConformalError::EmptyCalibration)?;
            fit_cqr(cfg, train, cal, ql, n_features)
        }
    }
}

/// Build a naive estimator around an already-fitted regressor, scoring it
/// on the training set it was fitted on.
pub fn naive_from_model(
    model: Box<dyn PointModel>,
    train: TrainingData<'_>,
) -> Result<CalibratedEstimator, ConformalError> {
    if train.len() == 0 {
        return Err(ConformalError::EmptyTrainingSet);
    }
    let preds = model.predict(train.features);
    let scores: Vec<f64> = train
        .targets
        .iter()
        .zip(preds.iter())
        .map(|(y, p)| (y - p).abs())
        .collect();
    Ok(CalibratedEstimator {
        method: Method::Naive,
        n_features: train.features.ncols(),
        scores: ConformityScores::new(scores, ScoreKind::AbsoluteResidual),
        state: State::Naive { model },
    })
}

const RESAMPLE_BUDGET: usize = 100;

/// Draw `k` bootstrap resamples of `0..n` (with replacement, size `n`)
/// from a ChaCha8 stream, redrawing the whole set until every index is
/// out-of-bag in at least one resample. The out-of-bag aggregate is
/// undefined for an index contained in every resample, so after
/// [`RESAMPLE_BUDGET`] failed redraws this errors.
pub fn bootstrap_resamples(
    n: usize,
    k: usize,
    seed: u64,
) -> Result<Vec<Vec<usize>>, ConformalError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut last_missing = 0usize;
    for _attempt in 0..RESAMPLE_BUDGET {
        let resamples: Vec<Vec<usize>> = (0..k)
            .map(|_| (0..n).map(|_| rng.gen_range(0..n)).collect())
            .collect();
        let mut omitted = vec![false; n];
        for resample in &resamples {
            let mut contains = vec![false; n];
            for &i in resample {
                contains[i] = true;
            }
            for i in 0..n {
                if !contains[i] {
                    omitted[i] = true;
                }
            }
        }
        match omitted.iter().position(|&o| !o) {
            None => return Ok(resamples),
            Some(index) => last_missing = index,
        }
    }
    Err(ConformalError::NeverOmitted {
        index: last_missing,
        budget: RESAMPLE_BUDGET,
    })
}

/// Fold id for every index of `0..n`: a seeded permutation cut into `k`
/// contiguous chunks, the first `n % k` folds one sample larger. This is
/// the assignment used by the CV estimators (and mirrors `data::split`).
pub fn cv_fold_assignment(n: usize, k: usize, seed: u64) -> Vec<usize> {
    fold_assignment(n, k, seed)
}

fn fit_jackknife(
    cfg: &IntervalConfig,
    train: TrainingData<'_>,
    learner: &dyn PointLearner,
    n_features: usize,
) -> Result<CalibratedEstimator, ConformalError> {
    let n = train.len();
    let k = cfg.k;
    let resamples = bootstrap_resamples(n, k, cfg.seed)?;
    let mut omitting: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (model_idx, resample) in resamples.iter().enumerate() {
        let mut contains = vec![false; n];
        for &i in resample {
            contains[i] = true;
        }
        for (i, present) in contains.iter().enumerate() {
            if !present {
                omitting[i].push(model_idx);
            }
        }
    }

    let mut models = Vec::with_capacity(k);
    for resample in &resamples {
        let (x, y) = train.rows(resample);
        models.push(learner.fit(x.view(), y.view())?);
    }

    // R_{phi,i} = |y_i - mu_{phi,-i}(x_i)| with the out-of-bag aggregate.
    let train_preds: Vec<Array1<f64>> = models.iter().map(|m| m.predict(train.features)).collect();
    let mut scores = Vec::with_capacity(n);
    let mut buf = Vec::new();
    for i in 0..n {
        buf.clear();
        buf.extend(omitting[i].iter().map(|&m| train_preds[m][i]));
        let agg = cfg.aggregation.apply(&buf);
        scores.push((train.targets[i] - agg).abs());
    }

    Ok(CalibratedEstimator {
        method: Method::JackknifePlusAb,
        n_features,
        scores: ConformityScores::new(scores, ScoreKind::AbsoluteResidual),
        state: State::Jackknife {
            models,
            omitting,
            aggregation: cfg.aggregation,
        },
    })
}

fn fit_cv(
    cfg: &IntervalConfig,
    train: TrainingData<'_>,
    learner: &dyn PointLearner,
    n_features: usize,
) -> Result<CalibratedEstimator, ConformalError> {
    let n = train.len();
    let k = cfg.k;
    if n < k {
        return Err(ConformalError::TooFewSamples { n, k });
    }
    let fold_of = cv_fold_assignment(n, k, cfg.seed);

    let mut fold_models = Vec::with_capacity(k);
    for fold in 0..k {
        let keep: Vec<usize> = (0..n).filter(|&i| fold_of[i] != fold).collect();
        let (x, y) = train.rows(&keep);
        fold_models.push(learner.fit(x.view(), y.view())?);
    }

    // R_i = |y_i - mu_{-fold(i)}(x_i)|.
    let oof_preds: Vec<Array1<f64>> = fold_models
        .iter()
        .map(|m| m.predict(train.features))
        .collect();
    let scores: Vec<f64> = (0..n)
        .map(|i| (train.targets[i] - oof_preds[fold_of[i]][i]).abs())
        .collect();

    let full_model = if cfg.method == Method::Cv {
        Some(learner.fit(train.features, train.targets)?)
    } else {
        None
    };

    Ok(CalibratedEstimator {
        method: cfg.method,
        n_features,
        scores: ConformityScores::new(scores, ScoreKind::AbsoluteResidual),
        state: State::Cv {
            full_model,
            fold_models,
            fold_of,
        },
    })
}

fn fit_cqr(
    cfg: &IntervalConfig,
    train: TrainingData<'_>,
    calibration: TrainingData<'_>,
    learner: &dyn QuantileLearner,
    n_features: usize,
) -> Result<CalibratedEstimator, ConformalError> {
    if calibration.len() == 0 {
        return Err(ConformalError::EmptyCalibration);
    }
    let lower_model = learner.fit_at(cfg.alpha / 2.0, train.features, train.targets)?;
    let upper_model = learner.fit_at(1.0 - cfg.alpha / 2.0, train.features, train.targets)?;

    // Boosted quantile models can cross; swap pointwise before scoring.
    let lo_raw = lower_model.predict(calibration.features);
    let hi_raw = upper_model.predict(calibration.features);
    let scores: Vec<f64> = calibration
        .targets
        .iter()
        .zip(lo_raw.iter().zip(hi_raw.iter()))
        .map(|(&y, (&l, &h))| {
            let (lo, hi) = if l <= h { (l, h) } else { (h, l) };
            (lo - y).max(y - hi)
        })
        .collect();

    Ok(CalibratedEstimator {
        method: Method::Cqr,
        n_features,
        scores: ConformityScores::new(scores, ScoreKind::CqrSigned),
        state: State::Cqr {
            lower_model,
            upper_model,
        },
    })
}

impl CalibratedEstimator {
    pub fn method(&self) -> Method {
        self.method
    }

    pub fn scores(&self) -> &ConformityScores {
        &self.scores
    }

    /// Evaluate the base models on a test set. The result is
    /// alpha-independent and can be recalibrated cheaply via
    /// [`CalibratedEstimator::intervals`].
    pub fn predict(&self, test: ArrayView2<'_, f64>) -> Result<TestPredictions, ConformalError> {
        if test.ncols() != self.n_features {
            return Err(ConformalError::WidthMismatch {
                expected: self.n_features,
                got: test.ncols(),
            });
        }
        let n = test.nrows();
        let inner = match &self.state {
            State::Naive { model } => PredsInner::Point {
                point: model.predict(test),
            },
            State::Cv {
                full_model,
                fold_models,
                fold_of,
            } => match full_model {
                Some(model) => PredsInner::Point {
                    point: model.predict(test),
                },
                None => {
                    let fold_preds = stack_predictions(fold_models, test);
                    let point = per_index_mean(&fold_preds, fold_of);
                    PredsInner::Folds { fold_preds, point }
                }
            },
            State::Jackknife {
                models,
                omitting,
                aggregation,
            } => {
                let model_preds = stack_predictions(models, test);
                // Point prediction: mean over training indices of the
                // out-of-bag aggregate.
                let n_train = omitting.len();
                let mut point = Array1::zeros(n);
                let mut buf = Vec::new();
                for j in 0..n {
                    let mut acc = 0.0;
                    for omit in omitting {
                        buf.clear();
                        buf.extend(omit.iter().map(|&m| model_preds[[m, j]]));
                        acc += aggregation.apply(&buf);
                    }
                    point[j] = acc / n_train as f64;
                }
                PredsInner::Ensemble { model_preds, point }
            }
            State::Cqr {
                lower_model,
                upper_model,
            } => {
                let lo_raw = lower_model.predict(test);
                let hi_raw = upper_model.predict(test);
                let mut lo = Array1::zeros(n);
                let mut hi = Array1::zeros(n);
                for j in 0..n {
                    let (l, h) = if lo_raw[j] <= hi_raw[j] {
                        (lo_raw[j], hi_raw[j])
                    } else {
                        (hi_raw[j], lo_raw[j])
                    };
                    lo[j] = l;
                    hi[j] = h;
                }
                PredsInner::Quantiles { lo, hi }
            }
        };
        Ok(TestPredictions { n, inner })
    }

    /// Calibrate the frozen scores at `alpha` and assemble the intervals.
    pub fn intervals(
        &self,
        preds: &TestPredictions,
        alpha: f64,
    ) -> Result<IntervalBatch, ConformalError> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(ConformalError::BadAlpha(alpha));
        }
        let scores = &self.scores.scores;
        let n_cal = scores.len();
        let k = quantile_index(n_cal, alpha);
        let q_hi = if k > n_cal {
            f64::INFINITY
        } else {
            let mut buf = scores.clone();
            kth_smallest(&mut buf, k)
        };

        let n = preds.n;
        let (point, lower, upper) = match (&self.state, &preds.inner) {
            (State::Naive { .. }, PredsInner::Point { point })
            | (State::Cv { .. }, PredsInner::Point { point }) => {
                let lower = point.mapv(|p| p - q_hi);
                let upper = point.mapv(|p| p + q_hi);
                (point.clone(), lower, upper)
            }
            (State::Cv { fold_of, .. }, PredsInner::Folds { fold_preds, point }) => {
                match self.method {
                    Method::CvPlus => {
                        let (lower, upper) =
                            plus_bounds(fold_preds, fold_of, scores, k, |m, j, preds| {
                                preds[[m, j]]
                            });
                        (point.clone(), lower, upper)
                    }
                    Method::CvMinmax => {
                        let mut lower = Array1::zeros(n);
                        let mut upper = Array1::zeros(n);
                        for j in 0..n {
                            let col = fold_preds.column(j);
                            let min = col.iter().copied().fold(f64::INFINITY, f64::min);
                            let max = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                            lower[j] = min - q_hi;
                            upper[j] = max + q_hi;
                        }
                        (point.clone(), lower, upper)
                    }
                    _ => unreachable!("fold predictions only arise for cv_plus/cv_minmax"),
                }
            }
            (
                State::Jackknife {
                    omitting,
                    aggregation,
                    ..
                },
                PredsInner::Ensemble { model_preds, point },
            ) => {
                let mut lower = Array1::zeros(n);
                let mut upper = Array1::zeros(n);
                let n_train = omitting.len();
                let mut agg = vec![0.0; n_train];
                let mut lo_buf = vec![0.0; n_train];
                let mut hi_buf = vec![0.0; n_train];
                let mut model_buf = Vec::new();
                let k_lo = n_train + 1 - k.min(n_train + 1); // n+1-k, saturating at 0
                for j in 0..n {
                    for (i, omit) in omitting.iter().enumerate() {
                        model_buf.clear();
                        model_buf.extend(omit.iter().map(|&m| model_preds[[m, j]]));
                        agg[i] = aggregation.apply(&model_buf);
                    }
                    for i in 0..n_train {
                        lo_buf[i] = agg[i] - scores[i];
                        hi_buf[i] = agg[i] + scores[i];
                    }
                    lower[j] = if k > n_train {
                        f64::NEG_INFINITY
                    } else {
                        kth_smallest(&mut lo_buf, k_lo)
                    };
                    upper[j] = if k > n_train {
                        f64::INFINITY
                    } else {
                        kth_smallest(&mut hi_buf, k)
                    };
                }
                (point.clone(), lower, upper)
            }
            (State::Cqr { .. }, PredsInner::Quantiles { lo, hi }) => {
                let point = Array1::from_shape_fn(n, |j| 0.5 * (lo[j] + hi[j]));
                let lower = Array1::from_shape_fn(n, |j| lo[j] - q_hi);
                let upper = Array1::from_shape_fn(n, |j| hi[j] + q_hi);
                (point, lower, upper)
            }
            _ => unreachable!("test predictions produced by a different estimator kind"),
        };

        Ok(IntervalBatch {
            point,
            lower,
            upper,
            alpha,
            method: self.method,
        })
    }

    /// One-shot convenience: evaluate the test set and calibrate at
    /// `alpha`.
    pub fn predict_intervals(
        &self,
        test: ArrayView2<'_, f64>,
        alpha: f64,
    ) -> Result<IntervalBatch, ConformalError> {
        let preds = self.predict(test)?;
        self.intervals(&preds, alpha)
    }
}

fn stack_predictions(models: &[Box<dyn PointModel>], test: ArrayView2<'_, f64>) -> Array2<f64> {
    let n = test.nrows();
    let mut preds = Array2::zeros((models.len(), n));
    for (m, model) in models.iter().enumerate() {
        let p = model.predict(test);
        preds.row_mut(m).assign(&p);
    }
    preds
}

fn per_index_mean(fold_preds: &Array2<f64>, fold_of: &[usize]) -> Array1<f64> {
    let n = fold_preds.ncols();
    let n_train = fold_of.len();
    Array1::from_shape_fn(n, |j| {
        fold_of.iter().map(|&f| fold_preds[[f, j]]).sum::<f64>() / n_train as f64
    })
}

/// Shared CV+/jackknife+ bound computation: the `(n+1-k)`-th smallest of
/// `{v_i - R_i}` and the `k`-th smallest of `{v_i + R_i}`.
fn plus_bounds(
    fold_preds: &Array2<f64>,
    fold_of: &[usize],
    scores: &[f64],
    k: usize,
    value: impl Fn(usize, usize, &Array2<f64>) -> f64,
) -> (Array1<f64>, Array1<f64>) {
    let n = fold_preds.ncols();
    let n_train = fold_of.len();
    let mut lower = Array1::zeros(n);
    let mut upper = Array1::zeros(n);
    let mut lo_buf = vec![0.0; n_train];
    let mut hi_buf = vec![0.0; n_train];
    for j in 0..n {
        for i in 0..n_train {
            let v = value(fold_of[i], j, fold_preds);
            lo_buf[i] = v - scores[i];
            hi_buf[i] = v + scores[i];
        }
        if k > n_train {
            lower[j] = f64::NEG_INFINITY;
            upper[j] = f64::INFINITY;
        } else {
            lower[j] = kth_smallest(&mut lo_buf, n_train + 1 - k);
            upper[j] = kth_smallest(&mut hi_buf, k);
        }
    }
    (lower, upper)
}
