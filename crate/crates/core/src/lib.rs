//! Synthetic pre-blockage signatures for mmWave links: a geometric channel
//! simulator, dataset construction for four blockage-prediction tasks, small
//! GRU/CNN predictors trained from scratch, and the evaluation metrics.
//!
//! The numeric core is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix it to `f64`.

// `!(x > 0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod cli;
pub mod error;
pub mod matrix;
pub mod metrics;
pub mod neural;
pub mod pipeline;
pub mod rng;
pub mod scalar;

pub use error::{Error, ErrorKind, Result};
pub use matrix::Matrix;
pub use scalar::Scalar;

pub type Scene = channel::Scene<f64>;
pub type ScenarioConfig = channel::ScenarioConfig<f64>;
pub type RawSequencePair = channel::RawSequencePair<f64>;
pub type DataPoint = pipeline::DataPoint<f64>;
pub type DevelopmentDataset = pipeline::DevelopmentDataset<f64>;
pub type ModelParams = neural::ModelParams<f64>;
