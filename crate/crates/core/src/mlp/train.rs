//! Adam training loop with step-decay scheduling.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::net::{forward_eval, gradients_traced, Gradients};
use super::{MLPModel, MlpError};

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const EPS: f64 = 1e-8;

// Keeps the shuffle/dropout stream distinct from the init stream that
// already consumed draws from config.seed.
const TRAIN_STREAM_OFFSET: u64 = 0x7261_696e;

/// Per-epoch mean-squared-error losses.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainTrace {
    /// Mean over the epoch's batches of the batch MSE (train mode).
    pub train_loss: Vec<f64>,
    /// Eval-mode MSE on the validation set after the epoch.
    pub val_loss: Vec<f64>,
}

fn check_train_targets(y: ArrayView1<'_, f64>) -> Result<(), MlpError> {
    for &t in y {
        if !(0.0..=1.0).contains(&t) {
            return Err(MlpError::TargetOutOfRange(t));
        }
    }
    Ok(())
}

// Validation targets may escape [0, 1] when they were normalised with
// training-set statistics; they only feed the reported loss.
fn check_val_targets(y: ArrayView1<'_, f64>) -> Result<(), MlpError> {
    for &t in y {
        if !t.is_finite() {
            return Err(MlpError::TargetOutOfRange(t));
        }
    }
    Ok(())
}

/// Train `model` on `(train_x, train_y)` for `model.config.epochs` epochs,
/// recording train and validation MSE per epoch.
///
/// Runs exactly `epochs * ceil(n / batch_size)` optimiser steps: batches
/// are reshuffled every epoch from a ChaCha8 stream derived from the run
/// seed, and the last partial batch is trained on, not dropped. The
/// learning rate is `lr * gamma^floor(epoch / step_epochs)`.
pub fn train(
    mut model: MLPModel,
    train_x: ArrayView2<'_, f64>,
    train_y: ArrayView1<'_, f64>,
    val_x: ArrayView2<'_, f64>,
    val_y: ArrayView1<'_, f64>,
) -> Result<(MLPModel, TrainTrace), MlpError> {
    let config = model.config.clone();
    config.validate()?;
    model.check_width(train_x.ncols())?;
    model.check_width(val_x.ncols())?;
    if train_y.len() != train_x.nrows() {
        return Err(MlpError::LengthMismatch {
            left: train_y.len(),
            right: train_x.nrows(),
        });
    }
    if val_y.len() != val_x.nrows() {
        return Err(MlpError::LengthMismatch {
            left: val_y.len(),
            right: val_x.nrows(),
        });
    }
    check_train_targets(train_y)?;
    check_val_targets(val_y)?;

    let n = train_x.nrows();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(TRAIN_STREAM_OFFSET));
    let mut order: Vec<usize> = (0..n).collect();
    let mut trace = TrainTrace {
        train_loss: Vec::with_capacity(config.epochs),
        val_loss: Vec::with_capacity(config.epochs),
    };

    for epoch in 0..config.epochs {
        let lr = config.learning_rate
            * config
                .scheduler_gamma
                .powi((epoch / config.scheduler_step_epochs) as i32);
        order.shuffle(&mut rng);

        let mut loss_sum = 0.0;
        let mut n_batches = 0usize;
        for (batch_index, chunk) in order.chunks(config.batch_size).enumerate() {
            let batch_x = Array2::from_shape_fn((chunk.len(), train_x.ncols()), |(i, j)| {
                train_x[[chunk[i], j]]
            });
            let batch_y = Array1::from_iter(chunk.iter().map(|&i| train_y[i]));

            let dropout = if config.dropout_prob > 0.0 {
                Some(&mut rng)
            } else {
                None
            };
            let (mse, grads) =
                gradients_traced(&model, batch_x.view(), batch_y.view(), dropout)?;
            if !mse.is_finite() {
                return Err(MlpError::NonFiniteLoss {
                    epoch,
                    batch: batch_index,
                });
            }
            adam_step(&mut model, &grads, lr);
            if !parameters_finite(&model) {
                return Err(MlpError::NonFiniteParameter {
                    epoch,
                    batch: batch_index,
                });
            }
            loss_sum += mse;
            n_batches += 1;
        }

        trace.train_loss.push(loss_sum / n_batches as f64);
        let (val_preds, _) = forward_eval(&model, val_x)?;
        let val_mse = val_preds
            .iter()
            .zip(val_y.iter())
            .map(|(p, t)| (p - t) * (p - t))
            .sum::<f64>()
            / val_y.len() as f64;
        trace.val_loss.push(val_mse);
    }

    Ok((model, trace))
}

fn adam_step(model: &mut MLPModel, grads: &Gradients, lr: f64) {
    model.step += 1;
    let t = model.step as i32;
    let bias1 = 1.0 - BETA1.powi(t);
    let bias2 = 1.0 - BETA2.powi(t);

    for (index, grad) in grads.layers.iter().enumerate() {
        let m = &mut model.first_moment[index];
        let v = &mut model.second_moment[index];

        m.weights.zip_mut_with(&grad.weights, |m, &g| {
            *m = BETA1 * *m + (1.0 - BETA1) * g;
        });
        v.weights.zip_mut_with(&grad.weights, |v, &g| {
            *v = BETA2 * *v + (1.0 - BETA2) * g * g;
        });
        m.bias.zip_mut_with(&grad.bias, |m, &g| {
            *m = BETA1 * *m + (1.0 - BETA1) * g;
        });
        v.bias.zip_mut_with(&grad.bias, |v, &g| {
            *v = BETA2 * *v + (1.0 - BETA2) * g * g;
        });

        let layer = &mut model.layers[index];
        ndarray::Zip::from(&mut layer.weights)
            .and(&m.weights)
            .and(&v.weights)
            .for_each(|w, &m, &v| {
                *w -= lr * (m / bias1) / ((v / bias2).sqrt() + EPS);
            });
        ndarray::Zip::from(&mut layer.bias)
            .and(&m.bias)
            .and(&v.bias)
            .for_each(|b, &m, &v| {
                *b -= lr * (m / bias1) / ((v / bias2).sqrt() + EPS);
            });
    }
}

fn parameters_finite(model: &MLPModel) -> bool {
    model.layers.iter().all(|l| {
        l.weights.iter().all(|w| w.is_finite()) && l.bias.iter().all(|b| b.is_finite())
    })
}
