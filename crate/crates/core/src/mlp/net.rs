//! Forward passes and reverse-mode gradients.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{DenseLayer, MLPModel, MlpError};

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

#[cfg(test)]
pub(crate) fn sigmoid_for_tests(z: f64) -> f64 {
    sigmoid(z)
}

/// Everything backward needs: pre-activations, post-(relu, dropout)
/// activations per hidden layer, the dropout masks used, and the
/// predictions.
pub(crate) struct ForwardTrace {
    pub zs: Vec<Array2<f64>>,
    pub hidden: Vec<Array2<f64>>,
    pub masks: Vec<Option<Array2<f64>>>,
    pub preds: Array1<f64>,
}

impl ForwardTrace {
    pub fn features(&self) -> &Array2<f64> {
        self.hidden.last().expect("at least one hidden layer")
    }
}

/// Run the network. `dropout` carries the RNG for train mode; eval mode
/// passes `None` and is a pure function of `(model, x)`. Kept units are
/// scaled by `1 / (1 - p)` at train time (inverted dropout), so eval mode
/// applies no rescaling.
pub(crate) fn forward_full(
    model: &MLPModel,
    x: ArrayView2<'_, f64>,
    mut dropout: Option<&mut ChaCha8Rng>,
) -> Result<ForwardTrace, MlpError> {
    model.check_width(x.ncols())?;
    let n_layers = model.layers.len();
    let p = model.config.dropout_prob;

    let mut zs = Vec::with_capacity(n_layers);
    let mut hidden = Vec::with_capacity(n_layers - 1);
    let mut masks = Vec::with_capacity(n_layers - 1);

    let mut activation = x.to_owned();
    for (index, layer) in model.layers.iter().enumerate() {
        let mut z = activation.dot(&layer.weights);
        for mut row in z.rows_mut() {
            row += &layer.bias;
        }
        let last = index == n_layers - 1;
        if last {
            let preds = z.column(0).mapv(sigmoid);
            zs.push(z);
            return Ok(ForwardTrace {
                zs,
                hidden,
                masks,
                preds,
            });
        }

        let mut a = z.mapv(|v| v.max(0.0));
        let mask = match (&mut dropout, p > 0.0) {
            (Some(rng), true) => {
                let keep = 1.0 - p;
                let mask = Array2::from_shape_fn(a.dim(), |_| {
                    if rng.gen::<f64>() < p {
                        0.0
                    } else {
                        1.0 / keep
                    }
                });
                a *= &mask;
                Some(mask)
            }
            _ => None,
        };
        zs.push(z);
        masks.push(mask);
        hidden.push(a.clone());
        activation = a;
    }
    unreachable!("loop returns at the output layer");
}

/// Eval-mode forward: dropout disabled, nothing rescaled. Returns the
/// sigmoid predictions and the feature-layer activations.
pub fn forward_eval(
    model: &MLPModel,
    x: ArrayView2<'_, f64>,
) -> Result<(Array1<f64>, Array2<f64>), MlpError> {
    let trace = forward_full(model, x, None)?;
    let features = trace.features().clone();
    Ok((trace.preds, features))
}

/// Train-mode forward with dropout driven by `rng`.
pub fn forward_train(
    model: &MLPModel,
    x: ArrayView2<'_, f64>,
    rng: &mut ChaCha8Rng,
) -> Result<(Array1<f64>, Array2<f64>), MlpError> {
    let trace = forward_full(model, x, Some(rng))?;
    let features = trace.features().clone();
    Ok((trace.preds, features))
}

/// Eval-mode feature extraction: the penultimate-layer activations.
pub fn extract(model: &MLPModel, x: ArrayView2<'_, f64>) -> Result<Array2<f64>, MlpError> {
    Ok(forward_eval(model, x)?.1)
}

/// Parameter-shaped gradient set.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<DenseLayer>,
}

/// Exact reverse-mode gradients of
/// `mean((pred - y)^2) + weight_decay / 2 * sum(theta^2)`
/// over all parameters (weights and biases; the decay term is the coupled
/// L2 form). Returns the MSE part of the loss alongside the gradients.
pub fn gradients(
    model: &MLPModel,
    x: ArrayView2<'_, f64>,
    y: ArrayView1<'_, f64>,
) -> Result<(f64, Gradients), MlpError> {
    gradients_traced(model, x, y, None)
}

pub(crate) fn gradients_traced(
    model: &MLPModel,
    x: ArrayView2<'_, f64>,
    y: ArrayView1<'_, f64>,
    dropout: Option<&mut ChaCha8Rng>,
) -> Result<(f64, Gradients), MlpError> {
    if y.len() != x.nrows() {
        return Err(MlpError::LengthMismatch {
            left: y.len(),
            right: x.nrows(),
        });
    }
    let trace = forward_full(model, x, dropout)?;
    let n = x.nrows() as f64;
    let n_layers = model.layers.len();
    let wd = model.config.weight_decay;

    let mse = trace
        .preds
        .iter()
        .zip(y.iter())
        .map(|(p, t)| (p - t) * (p - t))
        .sum::<f64>()
        / n;

    // Output layer: dL/dz = 2/n * (p - y) * p * (1 - p), shaped (n, 1).
    let mut delta = Array2::from_shape_fn((x.nrows(), 1), |(i, _)| {
        let p = trace.preds[i];
        2.0 / n * (p - y[i]) * p * (1.0 - p)
    });

    let mut grads: Vec<DenseLayer> = model
        .layers
        .iter()
        .map(|l| DenseLayer::zeros_like(l.weights.dim()))
        .collect();

    for index in (0..n_layers).rev() {
        let upstream: ArrayView2<'_, f64> = if index == 0 {
            x
        } else {
            trace.hidden[index - 1].view()
        };
        grads[index].weights = upstream.t().dot(&delta);
        grads[index].bias = delta.sum_axis(Axis(0));
        if wd > 0.0 {
            grads[index]
                .weights
                .zip_mut_with(&model.layers[index].weights, |g, w| *g += wd * w);
            grads[index]
                .bias
                .zip_mut_with(&model.layers[index].bias, |g, b| *g += wd * b);
        }

        if index > 0 {
            let mut upstream_delta = delta.dot(&model.layers[index].weights.t());
            // Backward through dropout then the rectifier.
            if let Some(mask) = &trace.masks[index - 1] {
                upstream_delta *= mask;
            }
            upstream_delta.zip_mut_with(&trace.zs[index - 1], |d, z| {
                if *z <= 0.0 {
                    *d = 0.0;
                }
            });
            delta = upstream_delta;
        }
    }

    Ok((mse, Gradients { layers: grads }))
}
