//! GRU and CNN predictors with hand-written backpropagation.

mod cnn;
mod config;
mod gru;
mod loss;
mod model;
mod ops;
mod optim;
mod params;
mod train;

pub use config::{Architecture, CnnConfig, ConvSpec, GruConfig, Head, Stack};
pub use loss::{argmax, cross_entropy, cross_entropy_logit_grad, mse, mse_grad, softmax, PROBABILITY_FLOOR};
pub use model::{backward, cnn_forward, forward, gru_forward, Cache, Mode};
pub use optim::{Adam, AdamConfig};
pub use params::ModelParams;
pub use train::{check_compatible, evaluate, predict, predict_indices, train, EpochRecord, Predictions, TrainConfig, TrainOutcome};
