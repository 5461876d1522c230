//! Model-agnostic prediction intervals for regression.
//!
//! The crate is organised as a pipeline: [`data`] ingests tabular feature
//! data and produces deterministic splits, [`mlp`] optionally compresses
//! wide inputs into a small learned feature vector, [`gbrt`] fits
//! gradient-boosted regression trees under squared-error or pinball loss,
//! [`conformal`] wraps any base regressor in one of six prediction-interval
//! constructions, and [`metrics`] scores the resulting intervals for
//! coverage and width.
//!
//! All randomised components are driven by ChaCha8 generators seeded with a
//! caller-supplied 64-bit seed, so every stage is reproducible.

// Validation guards are written as `!(v >= 0.0)` on purpose: the negated
// form rejects NaN, which `v < 0.0` would let through.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod conformal;
pub mod data;
pub mod gbrt;
pub mod metrics;
pub mod mlp;

mod util;
