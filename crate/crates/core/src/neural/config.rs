use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Head {
    /// Softmax over `n_out` classes.
    Classifier { n_out: usize },
    /// One unconstrained real output.
    Regressor,
}

impl Head {
    pub fn n_out(self) -> usize {
        match self {
            Head::Classifier { n_out } => n_out,
            Head::Regressor => 1,
        }
    }

    fn validate(self) -> Result<()> {
        match self {
            Head::Classifier { n_out } if n_out < 2 => {
                Err(Error::Config(format!("a classifier needs at least 2 outputs, got {n_out}")))
            }
            _ => Ok(()),
        }
    }
}

fn check_dropout(rate: f64) -> Result<()> {
    if !(0.0..1.0).contains(&rate) {
        return Err(Error::Config(format!("dropout rate {rate} is outside [0, 1)")));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GruConfig {
    pub input_dim: usize,
    pub hidden_dim: usize,
    pub num_layers: usize,
    pub seq_len: usize,
    pub head: Head,
    pub dropout: f64,
}

impl GruConfig {
    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 || self.hidden_dim == 0 || self.num_layers == 0 || self.seq_len == 0 {
            return Err(Error::Config(format!("GRU dimensions must be positive: {self:?}")));
        }
        self.head.validate()?;
        check_dropout(self.dropout)
    }

    pub(crate) fn layer_input(&self, layer: usize) -> usize {
        if layer == 0 {
            self.input_dim
        } else {
            self.hidden_dim
        }
    }

    pub fn param_count(&self) -> usize {
        let h = self.hidden_dim;
        let layers: usize = (0..self.num_layers).map(|l| 3 * h * (self.layer_input(l) + h + 2)).sum();
        layers + self.head.n_out() * (h + 1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConvSpec {
    pub in_ch: usize,
    pub out_ch: usize,
    pub kernel: usize,
    pub padding: usize,
}

impl ConvSpec {
    pub fn new(in_ch: usize, out_ch: usize, kernel: usize, padding: usize) -> Self {
        Self { in_ch, out_ch, kernel, padding }
    }

    pub fn param_count(&self) -> usize {
        self.out_ch * (self.in_ch * self.kernel * self.kernel + 1)
    }
}

/// Convolution blocks (each followed by ReLU) and a closing max-pool whose
/// stride equals its window.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stack {
    pub convs: Vec<ConvSpec>,
    pub pool: (usize, usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CnnConfig {
    /// `(rows, cols)` of the single-channel input.
    pub input_shape: (usize, usize),
    pub stacks: Vec<Stack>,
    pub head: Head,
    pub dropout: f64,
}

impl CnnConfig {
    /// Two stacks of two 3×3 convolutions (1→4→4, 4→8→16) with 2×3 pooling.
    pub fn outdoor(head: Head) -> Self {
        Self {
            input_shape: (16, 54),
            stacks: vec![
                Stack { convs: vec![ConvSpec::new(1, 4, 3, 1), ConvSpec::new(4, 4, 3, 1)], pool: (2, 3) },
                Stack { convs: vec![ConvSpec::new(4, 8, 3, 1), ConvSpec::new(8, 16, 3, 1)], pool: (2, 3) },
            ],
            head,
            dropout: 0.2,
        }
    }

    /// `(channels, rows, cols)` after every stage: the input, then each conv
    /// and each pool in order.
    pub fn shape_trace(&self) -> Result<Vec<(usize, usize, usize)>> {
        let (mut h, mut w) = self.input_shape;
        let mut c = 1;
        let mut trace = vec![(c, h, w)];
        for (s, stack) in self.stacks.iter().enumerate() {
            for conv in &stack.convs {
                if conv.in_ch != c {
                    return Err(Error::Config(format!(
                        "stack {s}: conv expects {} channels but receives {c}",
                        conv.in_ch
                    )));
                }
                if conv.kernel == 0 || conv.out_ch == 0 || h + 2 * conv.padding < conv.kernel || w + 2 * conv.padding < conv.kernel {
                    return Err(Error::Config(format!("stack {s}: conv {conv:?} does not fit {h}×{w}")));
                }
                h = h + 2 * conv.padding + 1 - conv.kernel;
                w = w + 2 * conv.padding + 1 - conv.kernel;
                c = conv.out_ch;
                trace.push((c, h, w));
            }
            let (ph, pw) = stack.pool;
            if ph == 0 || pw == 0 || h < ph || w < pw {
                return Err(Error::Config(format!("stack {s}: pool {ph}×{pw} does not fit {h}×{w}")));
            }
            h /= ph;
            w /= pw;
            trace.push((c, h, w));
        }
        Ok(trace)
    }

    pub fn flatten_dim(&self) -> Result<usize> {
        let &(c, h, w) = self.shape_trace()?.last().unwrap();
        Ok(c * h * w)
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_shape.0 == 0 || self.input_shape.1 == 0 {
            return Err(Error::Config("CNN input shape must be positive".into()));
        }
        self.flatten_dim()?;
        self.head.validate()?;
        check_dropout(self.dropout)
    }

    pub fn param_count(&self) -> usize {
        let convs: usize = self.stacks.iter().flat_map(|s| &s.convs).map(ConvSpec::param_count).sum();
        let flat = self.flatten_dim().unwrap_or(0);
        convs + self.head.n_out() * (flat + 1)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Architecture {
    Gru(GruConfig),
    Cnn(CnnConfig),
}

impl Architecture {
    pub fn validate(&self) -> Result<()> {
        match self {
            Architecture::Gru(c) => c.validate(),
            Architecture::Cnn(c) => c.validate(),
        }
    }

    pub fn param_count(&self) -> usize {
        match self {
            Architecture::Gru(c) => c.param_count(),
            Architecture::Cnn(c) => c.param_count(),
        }
    }

    pub fn head(&self) -> Head {
        match self {
            Architecture::Gru(c) => c.head,
            Architecture::Cnn(c) => c.head,
        }
    }

    pub fn dropout(&self) -> f64 {
        match self {
            Architecture::Gru(c) => c.dropout,
            Architecture::Cnn(c) => c.dropout,
        }
    }

    /// Expected `(rows, cols)` of one observation.
    pub fn input_shape(&self) -> (usize, usize) {
        match self {
            Architecture::Gru(c) => (c.seq_len, c.input_dim),
            Architecture::Cnn(c) => c.input_shape,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn outdoor_cnn_shapes_and_counts() {
        let cfg = CnnConfig::outdoor(Head::Classifier { n_out: 2 });
        let trace = cfg.shape_trace().unwrap();
        assert_eq!(trace[0], (1, 16, 54));
        assert_eq!(trace[3], (4, 8, 18));
        assert_eq!(trace[6], (16, 4, 6));
        assert_eq!(cfg.flatten_dim().unwrap(), 384);
        assert_eq!(cfg.param_count(), 2422);
        assert_eq!(CnnConfig::outdoor(Head::Regressor).param_count(), 2037);
        assert_eq!(CnnConfig::outdoor(Head::Classifier { n_out: 3 }).param_count(), 2807);
    }

    #[test]
    fn gru_count_by_hand() {
        // 3 gates × 20 × (54 inputs + 20 recurrent + 2 biases) + FC 20·2 + 2.
        let cfg = GruConfig { input_dim: 54, hidden_dim: 20, num_layers: 1, seq_len: 16, head: Head::Classifier { n_out: 2 }, dropout: 0.2 };
        assert_eq!(cfg.param_count(), 4560 + 42);
    }

    #[test]
    fn bad_configs() {
        let mut cnn = CnnConfig::outdoor(Head::Regressor);
        cnn.stacks[1].convs[0].in_ch = 5;
        assert!(cnn.validate().is_err());
        let mut cnn = CnnConfig::outdoor(Head::Regressor);
        cnn.input_shape = (2, 2);
        assert!(cnn.validate().is_err());
        assert!(CnnConfig::outdoor(Head::Classifier { n_out: 1 }).validate().is_err());
        let mut cnn = CnnConfig::outdoor(Head::Regressor);
        cnn.dropout = 1.0;
        assert!(cnn.validate().is_err());
        let gru = GruConfig { input_dim: 0, hidden_dim: 20, num_layers: 1, seq_len: 16, head: Head::Regressor, dropout: 0.2 };
        assert!(gru.validate().is_err());
    }
}
