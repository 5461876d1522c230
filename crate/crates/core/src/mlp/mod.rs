//! Fully connected feature-extraction network.
//!
//! The architecture is fixed in shape but not in size: rectified-linear
//! hidden layers with inverted dropout, a single sigmoid output unit, and
//! the last hidden layer's activations exposed as the learned feature
//! vector. Training is Adam (beta1 = 0.9, beta2 = 0.999, eps = 1e-8) on
//! mean squared error with coupled L2 weight decay and a step-decay
//! learning-rate schedule.

use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

mod net;
mod train;

pub use net::{extract, forward_eval, forward_train, gradients, Gradients};
pub use train::{train, TrainTrace};

#[derive(Debug, Error)]
pub enum MlpError {
    #[error("invalid config: {0}")]
    BadConfig(String),

    #[error("batch width {got} does not match input layer width {expected}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("targets must lie in [0, 1] for the sigmoid output, found {0}")]
    TargetOutOfRange(f64),

    #[error("length mismatch: {left} targets vs {right} rows")]
    LengthMismatch { left: usize, right: usize },

    #[error("non-finite training loss at epoch {epoch}, batch {batch}")]
    NonFiniteLoss { epoch: usize, batch: usize },

    #[error("non-finite parameter after the optimiser step at epoch {epoch}, batch {batch}")]
    NonFiniteParameter { epoch: usize, batch: usize },

    #[error("checkpoint {path}: {message}")]
    Checkpoint { path: String, message: String },
}

/// Network and optimiser settings.
///
/// `layer_widths` runs input -> hidden... -> output; the default
/// `[1000, 64, 64, 8, 1]` feeds 1000-sample inputs through two 64-unit
/// layers into the 8-unit feature layer. Hidden activations are rectified
/// linear, the output is a logistic sigmoid; neither is configurable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MLPConfig {
    pub layer_widths: Vec<usize>,
    pub dropout_prob: f64,
    pub learning_rate: f64,
    pub weight_decay: f64,
    /// Learning-rate multiplier applied every `scheduler_step_epochs`.
    pub scheduler_gamma: f64,
    pub scheduler_step_epochs: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for MLPConfig {
    fn default() -> Self {
        MLPConfig {
            layer_widths: vec![1000, 64, 64, 8, 1],
            dropout_prob: 0.1,
            learning_rate: 5e-4,
            weight_decay: 1e-6,
            scheduler_gamma: 0.5,
            scheduler_step_epochs: 2,
            epochs: 100,
            batch_size: 64,
            seed: 0,
        }
    }
}

impl MLPConfig {
    pub fn validate(&self) -> Result<(), MlpError> {
        if self.layer_widths.len() < 2 {
            return Err(MlpError::BadConfig(
                "layer_widths needs an input and an output layer".into(),
            ));
        }
        if let Some(pos) = self.layer_widths.iter().position(|&w| w == 0) {
            return Err(MlpError::BadConfig(format!(
                "layer_widths[{pos}] is zero"
            )));
        }
        if *self.layer_widths.last().unwrap() != 1 {
            return Err(MlpError::BadConfig("output layer width must be 1".into()));
        }
        if !(self.dropout_prob >= 0.0 && self.dropout_prob < 1.0) {
            return Err(MlpError::BadConfig(format!(
                "dropout_prob must lie in [0, 1), got {}",
                self.dropout_prob
            )));
        }
        if !(self.learning_rate > 0.0) {
            return Err(MlpError::BadConfig("learning_rate must be > 0".into()));
        }
        if !(self.weight_decay >= 0.0) {
            return Err(MlpError::BadConfig("weight_decay must be >= 0".into()));
        }
        if !(self.scheduler_gamma > 0.0 && self.scheduler_gamma <= 1.0) {
            return Err(MlpError::BadConfig(
                "scheduler_gamma must lie in (0, 1]".into(),
            ));
        }
        if self.scheduler_step_epochs == 0 {
            return Err(MlpError::BadConfig(
                "scheduler_step_epochs must be >= 1".into(),
            ));
        }
        if self.batch_size == 0 {
            return Err(MlpError::BadConfig("batch_size must be >= 1".into()));
        }
        Ok(())
    }

    pub fn input_width(&self) -> usize {
        self.layer_widths[0]
    }

    /// Width of the penultimate (feature) layer.
    pub fn feature_width(&self) -> usize {
        self.layer_widths[self.layer_widths.len() - 2]
    }
}

/// One dense layer, also reused as the shape-matched container for
/// gradients and optimiser moments.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    /// input width x output width.
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
}

impl DenseLayer {
    fn zeros_like(widths: (usize, usize)) -> DenseLayer {
        DenseLayer {
            weights: Array2::zeros(widths),
            bias: Array1::zeros(widths.1),
        }
    }
}

/// Network parameters plus Adam state.
#[derive(Debug, Clone, PartialEq)]
pub struct MLPModel {
    pub config: MLPConfig,
    pub layers: Vec<DenseLayer>,
    pub first_moment: Vec<DenseLayer>,
    pub second_moment: Vec<DenseLayer>,
    pub step: u64,
}

impl MLPModel {
    /// Fresh model: weights drawn from the fan-in-scaled uniform
    /// `U(-1/sqrt(fan_in), 1/sqrt(fan_in))` in row-major order from a
    /// ChaCha8 stream seeded with `config.seed`; biases and moments zero.
    pub fn init(config: &MLPConfig) -> Result<MLPModel, MlpError> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut layers = Vec::new();
        let mut first = Vec::new();
        let mut second = Vec::new();
        for pair in config.layer_widths.windows(2) {
            let (fan_in, fan_out) = (pair[0], pair[1]);
            let bound = 1.0 / (fan_in as f64).sqrt();
            let weights =
                Array2::from_shape_fn((fan_in, fan_out), |_| rng.gen_range(-bound..bound));
            layers.push(DenseLayer {
                weights,
                bias: Array1::zeros(fan_out),
            });
            first.push(DenseLayer::zeros_like((fan_in, fan_out)));
            second.push(DenseLayer::zeros_like((fan_in, fan_out)));
        }
        Ok(MLPModel {
            config: config.clone(),
            layers,
            first_moment: first,
            second_moment: second,
            step: 0,
        })
    }

    pub fn input_width(&self) -> usize {
        self.config.input_width()
    }

    pub(crate) fn check_width(&self, got: usize) -> Result<(), MlpError> {
        if got != self.input_width() {
            return Err(MlpError::DimensionMismatch {
                expected: self.input_width(),
                got,
            });
        }
        Ok(())
    }

    /// Inference checkpoint: config, weight tensors in row-major order
    /// with their shapes, and the seed (inside the config). Optimiser
    /// moments are not persisted; a loaded model predicts bit-for-bit but
    /// resumes training with fresh Adam state.
    pub fn save(&self, path: &std::path::Path) -> Result<(), MlpError> {
        let checkpoint = Checkpoint {
            config: self.config.clone(),
            layers: self
                .layers
                .iter()
                .map(|l| CheckpointLayer {
                    input_width: l.weights.nrows(),
                    output_width: l.weights.ncols(),
                    weights: l.weights.iter().copied().collect(),
                    bias: l.bias.to_vec(),
                })
                .collect(),
        };
        let text = serde_json::to_string(&checkpoint).expect("checkpoint is serialisable");
        std::fs::write(path, text).map_err(|e| MlpError::Checkpoint {
            path: path.display().to_string(),
            message: e.to_string(),
        })
    }

    pub fn load(path: &std::path::Path) -> Result<MLPModel, MlpError> {
        let fail = |message: String| MlpError::Checkpoint {
            path: path.display().to_string(),
            message,
        };
        let text = std::fs::read_to_string(path).map_err(|e| fail(e.to_string()))?;
        let checkpoint: Checkpoint =
            serde_json::from_str(&text).map_err(|e| fail(e.to_string()))?;
        checkpoint.config.validate()?;

        let mut model = MLPModel::init(&checkpoint.config)?;
        if checkpoint.layers.len() != model.layers.len() {
            return Err(fail(format!(
                "expected {} layers, found {}",
                model.layers.len(),
                checkpoint.layers.len()
            )));
        }
        for (slot, stored) in model.layers.iter_mut().zip(checkpoint.layers) {
            let shape = (stored.input_width, stored.output_width);
            if slot.weights.dim() != shape {
                return Err(fail(format!(
                    "layer shape {:?} does not match config {:?}",
                    shape,
                    slot.weights.dim()
                )));
            }
            if stored.weights.len() != shape.0 * shape.1 || stored.bias.len() != shape.1 {
                return Err(fail("tensor length does not match declared shape".into()));
            }
            slot.weights = Array2::from_shape_vec(shape, stored.weights)
                .expect("length checked above");
            slot.bias = Array1::from_vec(stored.bias);
        }
        Ok(model)
    }
}

#[derive(Serialize, Deserialize)]
struct Checkpoint {
    config: MLPConfig,
    layers: Vec<CheckpointLayer>,
}

#[derive(Serialize, Deserialize)]
struct CheckpointLayer {
    input_width: usize,
    output_width: usize,
    weights: Vec<f64>,
    bias: Vec<f64>,
}
