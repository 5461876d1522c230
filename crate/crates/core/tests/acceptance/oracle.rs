//! Literal loop-level transcriptions of the six interval constructions,
//! kept independent of the library's estimator code paths. The only
//! shared inputs are the fold / bootstrap index sets (the equations are
//! conditional on them) and the raw data; every model evaluation,
//! aggregation, score, and quantile here is recomputed with plain loops.

// Plain indexed loops are the point of a transcription oracle.
#![allow(clippy::needless_range_loop)]

use ndarray::{Array1, Array2, ArrayView1};

/// `(1 - alpha)` empirical quantile: the `ceil((1 - alpha)(n + 1))`-th
/// smallest, `+inf` past the end.
pub fn q_hat_plus(values: &[f64], alpha: f64) -> f64 {
    let n = values.len();
    let k = ((1.0 - alpha) * (n as f64 + 1.0)).ceil() as usize;
    if k > n {
        return f64::INFINITY;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted[k - 1]
}

/// `alpha` empirical quantile via the negation identity.
pub fn q_hat_minus(values: &[f64], alpha: f64) -> f64 {
    let negated: Vec<f64> = values.iter().map(|v| -v).collect();
    -q_hat_plus(&negated, alpha)
}

/// Nearest training row by squared Euclidean distance, lowest index wins
/// ties; mirrors the support stub by construction.
fn nn_predict(train_x: &Array2<f64>, train_y: &Array1<f64>, row: ArrayView1<'_, f64>) -> f64 {
    let mut best = 0usize;
    let mut best_d = f64::INFINITY;
    for i in 0..train_x.nrows() {
        let d: f64 = train_x
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
    train_y[best]
}

pub struct OracleBatch {
    pub point: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

/// Training-residual band around the full-data model.
pub fn naive(
    train_x: &Array2<f64>,
    train_y: &Array1<f64>,
    test_x: &Array2<f64>,
    alpha: f64,
) -> OracleBatch {
    let n = train_y.len();
    let mut scores = Vec::with_capacity(n);
    for i in 0..n {
        let mu = nn_predict(train_x, train_y, train_x.row(i));
        scores.push((train_y[i] - mu).abs());
    }
    let q = q_hat_plus(&scores, alpha);
    let mut batch = OracleBatch {
        point: Vec::new(),
        lower: Vec::new(),
        upper: Vec::new(),
    };
    for j in 0..test_x.nrows() {
        let mu = nn_predict(train_x, train_y, test_x.row(j));
        batch.point.push(mu);
        batch.lower.push(mu - q);
        batch.upper.push(mu + q);
    }
    batch
}

/// Jackknife+-after-bootstrap with mean aggregation over the models whose
/// resample omits each index.
pub fn jackknife_plus_ab(
    train_x: &Array2<f64>,
    train_y: &Array1<f64>,
    test_x: &Array2<f64>,
    resamples: &[Vec<usize>],
    alpha: f64,
) -> OracleBatch {
    let n = train_y.len();
    // Materialise each bootstrap model's training set in resample order.
    let models: Vec<(Array2<f64>, Array1<f64>)> = resamples
        .iter()
        .map(|resample| {
            let x = Array2::from_shape_fn((resample.len(), train_x.ncols()), |(i, j)| {
                train_x[[resample[i], j]]
            });
            let y = Array1::from_iter(resample.iter().map(|&i| train_y[i]));
            (x, y)
        })
        .collect();
    let omits = |i: usize| -> Vec<usize> {
        resamples
            .iter()
            .enumerate()
            .filter(|(_, r)| !r.contains(&i))
            .map(|(k, _)| k)
            .collect()
    };
    let aggregate = |i: usize, row: ArrayView1<'_, f64>| -> f64 {
        let ks = omits(i);
        let sum: f64 = ks
            .iter()
            .map(|&k| nn_predict(&models[k].0, &models[k].1, row))
            .sum();
        sum / ks.len() as f64
    };

    let mut scores = Vec::with_capacity(n);
    for i in 0..n {
        scores.push((train_y[i] - aggregate(i, train_x.row(i))).abs());
    }

    let mut batch = OracleBatch {
        point: Vec::new(),
        lower: Vec::new(),
        upper: Vec::new(),
    };
    for j in 0..test_x.nrows() {
        let mut lows = Vec::with_capacity(n);
        let mut highs = Vec::with_capacity(n);
        let mut point_sum = 0.0;
        for i in 0..n {
            let v = aggregate(i, test_x.row(j));
            lows.push(v - scores[i]);
            highs.push(v + scores[i]);
            point_sum += v;
        }
        batch.point.push(point_sum / n as f64);
        batch.lower.push(q_hat_minus(&lows, alpha));
        batch.upper.push(q_hat_plus(&highs, alpha));
    }
    batch
}

pub enum CvVariant {
    Plain,
    Plus,
    Minmax,
}

/// The three K-fold constructions, sharing fold models and scores.
pub fn cv_family(
    train_x: &Array2<f64>,
    train_y: &Array1<f64>,
    test_x: &Array2<f64>,
    fold_of: &[usize],
    alpha: f64,
    variant: CvVariant,
) -> OracleBatch {
    let n = train_y.len();
    let k = fold_of.iter().max().unwrap() + 1;
    let fold_models: Vec<(Array2<f64>, Array1<f64>)> = (0..k)
        .map(|fold| {
            let keep: Vec<usize> = (0..n).filter(|&i| fold_of[i] != fold).collect();
            let x = Array2::from_shape_fn((keep.len(), train_x.ncols()), |(i, j)| {
                train_x[[keep[i], j]]
            });
            let y = Array1::from_iter(keep.iter().map(|&i| train_y[i]));
            (x, y)
        })
        .collect();
    let fold_predict = |fold: usize, row: ArrayView1<'_, f64>| -> f64 {
        nn_predict(&fold_models[fold].0, &fold_models[fold].1, row)
    };

    let mut scores = Vec::with_capacity(n);
    for i in 0..n {
        scores.push((train_y[i] - fold_predict(fold_of[i], train_x.row(i))).abs());
    }

    let mut batch = OracleBatch {
        point: Vec::new(),
        lower: Vec::new(),
        upper: Vec::new(),
    };
    for j in 0..test_x.nrows() {
        let row = test_x.row(j);
        match variant {
            CvVariant::Plain => {
                let mu = nn_predict(train_x, train_y, row);
                let mut lows = Vec::with_capacity(n);
                let mut highs = Vec::with_capacity(n);
                for i in 0..n {
                    lows.push(mu - scores[i]);
                    highs.push(mu + scores[i]);
                }
                batch.point.push(mu);
                batch.lower.push(q_hat_minus(&lows, alpha));
                batch.upper.push(q_hat_plus(&highs, alpha));
            }
            CvVariant::Plus => {
                let mut lows = Vec::with_capacity(n);
                let mut highs = Vec::with_capacity(n);
                let mut point_sum = 0.0;
                for i in 0..n {
                    let v = fold_predict(fold_of[i], row);
                    lows.push(v - scores[i]);
                    highs.push(v + scores[i]);
                    point_sum += v;
                }
                batch.point.push(point_sum / n as f64);
                batch.lower.push(q_hat_minus(&lows, alpha));
                batch.upper.push(q_hat_plus(&highs, alpha));
            }
            CvVariant::Minmax => {
                let mut min = f64::INFINITY;
                let mut max = f64::NEG_INFINITY;
                let mut point_sum = 0.0;
                for i in 0..n {
                    let v = fold_predict(fold_of[i], row);
                    min = min.min(v);
                    max = max.max(v);
                    point_sum += v;
                }
                let q = q_hat_plus(&scores, alpha);
                batch.point.push(point_sum / n as f64);
                batch.lower.push(min - q);
                batch.upper.push(max + q);
            }
        }
    }
    batch
}

/// Split-conformal quantile regression with the shifted nearest-neighbour
/// quantile stub (`prediction = nn + (tau - 0.5)`).
pub fn cqr(
    train_x: &Array2<f64>,
    train_y: &Array1<f64>,
    cal_x: &Array2<f64>,
    cal_y: &Array1<f64>,
    test_x: &Array2<f64>,
    alpha: f64,
) -> OracleBatch {
    let lo_shift = alpha / 2.0 - 0.5;
    let hi_shift = (1.0 - alpha / 2.0) - 0.5;
    let q_lo = |row: ArrayView1<'_, f64>| nn_predict(train_x, train_y, row) + lo_shift;
    let q_hi = |row: ArrayView1<'_, f64>| nn_predict(train_x, train_y, row) + hi_shift;

    let n2 = cal_y.len();
    let mut scores = Vec::with_capacity(n2);
    for i in 0..n2 {
        let lo = q_lo(cal_x.row(i));
        let hi = q_hi(cal_x.row(i));
        scores.push((lo - cal_y[i]).max(cal_y[i] - hi));
    }
    let k = ((1.0 - alpha) * (n2 as f64 + 1.0)).ceil() as usize;
    let q = if k > n2 {
        f64::INFINITY
    } else {
        let mut sorted = scores.clone();
        sorted.sort_by(f64::total_cmp);
        sorted[k - 1]
    };

    let mut batch = OracleBatch {
        point: Vec::new(),
        lower: Vec::new(),
        upper: Vec::new(),
    };
    for j in 0..test_x.nrows() {
        let lo = q_lo(test_x.row(j));
        let hi = q_hi(test_x.row(j));
        batch.point.push(0.5 * (lo + hi));
        batch.lower.push(lo - q);
        batch.upper.push(hi + q);
    }
    batch
}
