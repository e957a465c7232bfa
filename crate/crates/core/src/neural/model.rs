use super::cnn::{self, CnnCache};
use super::config::{Architecture, Head};
use super::gru::{self, GruCache};
use super::loss::softmax;
use super::params::ModelParams;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng::Rng;
use crate::scalar::Scalar;

/// Evaluation, or training with dropout drawn from the given generator.
pub enum Mode<'a> {
    Eval,
    Train(&'a mut Rng),
}

#[derive(Debug, Clone)]
enum Inner<T> {
    Gru(GruCache<T>),
    Cnn(CnnCache<T>),
}

/// Intermediates of one forward pass.
#[derive(Debug, Clone)]
pub struct Cache<T> {
    generation: u64,
    logits: Vec<T>,
    inner: Inner<T>,
}

impl<T> Cache<T> {
    pub fn logits(&self) -> &[T] {
        &self.logits
    }
}

fn check_input<T: Scalar>(params: &ModelParams<T>, obs: &Matrix<T>) -> Result<()> {
    let want = params.arch().input_shape();
    if obs.shape() != want {
        return Err(Error::Shape(format!("observation {:?}, network expects {want:?}", obs.shape())));
    }
    if obs.as_slice().iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("observation contains non-finite entries".into()));
    }
    Ok(())
}

/// Head output (class probabilities, or the single regression value) and
/// the cache for [`backward`].
pub fn forward<T: Scalar>(params: &ModelParams<T>, obs: &Matrix<T>, mode: Mode<'_>) -> Result<(Vec<T>, Cache<T>)> {
    check_input(params, obs)?;
    let rng = match mode {
        Mode::Eval => None,
        Mode::Train(r) => Some(r),
    };
    let (logits, inner) = match params.arch() {
        Architecture::Gru(c) => {
            let (l, c) = gru::forward(c, params.values(), obs, rng);
            (l, Inner::Gru(c))
        }
        Architecture::Cnn(c) => {
            let (l, c) = cnn::forward(c, params.values(), obs, rng);
            (l, Inner::Cnn(c))
        }
    };
    let output = match params.arch().head() {
        Head::Classifier { .. } => softmax(&logits),
        Head::Regressor => logits.clone(),
    };
    Ok((output, Cache { generation: params.generation(), logits, inner }))
}

pub fn gru_forward<T: Scalar>(params: &ModelParams<T>, obs: &Matrix<T>, mode: Mode<'_>) -> Result<(Vec<T>, Cache<T>)> {
    match params.arch() {
        Architecture::Gru(_) => forward(params, obs, mode),
        Architecture::Cnn(_) => Err(Error::Config("parameters belong to a CNN".into())),
    }
}

pub fn cnn_forward<T: Scalar>(params: &ModelParams<T>, obs: &Matrix<T>, mode: Mode<'_>) -> Result<(Vec<T>, Cache<T>)> {
    match params.arch() {
        Architecture::Cnn(_) => forward(params, obs, mode),
        Architecture::Gru(_) => Err(Error::Config("parameters belong to a GRU".into())),
    }
}

/// Gradient of the loss with respect to every parameter, given its gradient
/// with respect to the logits (pre-softmax for classifiers).
pub fn backward<T: Scalar>(params: &ModelParams<T>, cache: &Cache<T>, dlogits: &[T]) -> Result<Vec<T>> {
    if cache.generation != params.generation() {
        return Err(Error::StaleCache(format!(
            "cache from generation {}, parameters at {}",
            cache.generation,
            params.generation()
        )));
    }
    if dlogits.len() != cache.logits.len() {
        return Err(Error::Shape(format!("{} logit gradients for {} logits", dlogits.len(), cache.logits.len())));
    }
    Ok(match (params.arch(), &cache.inner) {
        (Architecture::Gru(c), Inner::Gru(k)) => gru::backward(c, params.values(), k, dlogits),
        (Architecture::Cnn(c), Inner::Cnn(k)) => cnn::backward(c, params.values(), k, dlogits),
        _ => return Err(Error::StaleCache("cache belongs to another architecture".into())),
    })
}
