//! Anomaly attribution for black-box regression models.
//!
//! Given query access to `f: R^M -> R` and one or more samples whose observed
//! output deviates from the prediction, [`gpa`] computes a MAP perturbation
//! and per-variable score distributions. [`baselines`] holds the comparison
//! methods (LIME, BayLIME, integrated gradients, Shapley values, Z-score,
//! likelihood compensation), [`oracle`] the closed-form values on the 2D
//! sinusoidal model, and [`metrics`] anomaly scores and consistency metrics.
//!
//! Numeric code is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix it to `f64`.

// `!(x > 0)` is deliberate: it also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod error;
pub mod gpa;
pub mod io;
pub mod metrics;
pub mod model;
pub mod oracle;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type ModelHandle = model::ModelHandle<f64>;
pub type GradientEstimatorConfig = model::GradientEstimatorConfig<f64>;
pub type TestSet = io::TestSet<f64>;
pub type Sample = io::Sample<f64>;
pub type GpaHyperParams = gpa::GpaHyperParams<f64>;
pub type AttributionResult = gpa::AttributionResult<f64>;
pub type ScoreDistribution = gpa::ScoreDistribution<f64>;
pub type ReferenceSet = baselines::ReferenceSet<f64>;
pub type LimeConfig = baselines::LimeConfig<f64>;
pub type IgConfig = baselines::IgConfig<f64>;

pub type ModelHandle32 = model::ModelHandle<f32>;
pub type TestSet32 = io::TestSet<f32>;
pub type GpaHyperParams32 = gpa::GpaHyperParams<f32>;
