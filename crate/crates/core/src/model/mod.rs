//! The two pronoun–antecedent scoring models.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::eval::Question;

pub mod udssm1;
pub mod udssm2;

pub use udssm1::Udssm1Params;
pub use udssm2::Udssm2Params;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ModelKind {
    /// Split-sentence model trained with in-batch negatives.
    Udssm1,
    /// Whole-sentence model trained on labelled pronoun pairs.
    Udssm2,
}

impl ModelKind {
    pub fn code(self) -> u8 {
        match self {
            ModelKind::Udssm1 => 1,
            ModelKind::Udssm2 => 2,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            1 => Some(ModelKind::Udssm1),
            2 => Some(ModelKind::Udssm2),
            _ => None,
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelKind::Udssm1 => "udssm1",
            ModelKind::Udssm2 => "udssm2",
        })
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "udssm1" | "udssm-i" | "1" => Ok(ModelKind::Udssm1),
            "udssm2" | "udssm-ii" | "2" => Ok(ModelKind::Udssm2),
            _ => Err(Error::Config(format!("unknown model kind {s:?}"))),
        }
    }
}

/// Embedding width `d` and single-direction hidden size `h`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ModelDims {
    pub embedding_dim: usize,
    pub hidden: usize,
}

impl Default for ModelDims {
    fn default() -> Self {
        ModelDims {
            embedding_dim: 300,
            hidden: 300,
        }
    }
}

/// Per-candidate scores and the chosen index.
#[derive(Clone, Debug, PartialEq)]
pub struct Prediction {
    pub choice: usize,
    pub scores: Vec<f64>,
}

impl Prediction {
    pub fn from_scores(scores: Vec<f64>) -> Self {
        Prediction {
            choice: argmax_first(&scores),
            scores,
        }
    }
}

/// Anything that can answer a [`Question`].
pub trait Predictor {
    fn kind(&self) -> ModelKind;
    fn predict_question(&self, q: &Question) -> Result<Prediction>;
}

/// Index of the largest value; ties go to the earliest index.
pub fn argmax_first(xs: &[f64]) -> usize {
    let mut best = 0;
    for (k, v) in xs.iter().enumerate().skip(1) {
        if *v > xs[best] {
            best = k;
        }
    }
    best
}

/// Either trained model, as restored from a checkpoint.
#[derive(Clone, Debug)]
pub enum AnyModel {
    Udssm1(Udssm1Params),
    Udssm2(Udssm2Params),
}

impl Predictor for AnyModel {
    fn kind(&self) -> ModelKind {
        match self {
            AnyModel::Udssm1(_) => ModelKind::Udssm1,
            AnyModel::Udssm2(_) => ModelKind::Udssm2,
        }
    }

    fn predict_question(&self, q: &Question) -> Result<Prediction> {
        match self {
            AnyModel::Udssm1(p) => p.predict_question(q),
            AnyModel::Udssm2(p) => p.predict_question(q),
        }
    }
}
