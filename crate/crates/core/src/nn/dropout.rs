use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::tensor::{Graph, Tensor, Var};

/// Whether stochastic layers are active.
pub enum Mode<'r> {
    Train { rate: f64, rng: &'r mut ChaCha8Rng },
    Infer,
}

impl Mode<'_> {
    pub fn is_train(&self) -> bool {
        matches!(self, Mode::Train { .. })
    }
}

pub fn check_rate(rate: f64) -> Result<()> {
    if (0.0..1.0).contains(&rate) {
        Ok(())
    } else {
        Err(Error::Config(format!("dropout rate {rate} outside [0, 1)")))
    }
}

/// Inverted dropout: in training each element survives with probability
/// `1 - p` and is scaled by `1 / (1 - p)`; inference is the identity.
pub fn dropout(g: &mut Graph, x: Var, mode: &mut Mode) -> Result<Var> {
    let (rate, rng) = match mode {
        Mode::Infer => return Ok(x),
        Mode::Train { rate, rng } => (*rate, rng),
    };
    check_rate(rate)?;
    if rate == 0.0 {
        return Ok(x);
    }
    let keep = 1.0 - rate;
    let scale = 1.0 / keep;
    let shape = g.shape(x).to_vec();
    let n: usize = shape.iter().product();
    let mask: Vec<f64> = (0..n)
        .map(|_| if rng.gen::<f64>() < keep { scale } else { 0.0 })
        .collect();
    let m = g.constant(Tensor::new(shape, mask)?);
    g.mul(x, m)
}
