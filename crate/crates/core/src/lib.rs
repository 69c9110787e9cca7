//! Unsupervised pronoun resolution with two neural scoring models trained
//! on automatically mined pronoun pairs.

pub mod corpus;
pub mod diagnostics;
pub mod error;
pub mod eval;
pub mod model;
pub mod nn;
pub mod tensor;
pub mod train;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/mining.md")]
    mod mining {}
    #[doc = include_str!("../../../book/src/autodiff.md")]
    mod autodiff {}
    #[doc = include_str!("../../../book/src/udssm1.md")]
    mod udssm1 {}
    #[doc = include_str!("../../../book/src/udssm2.md")]
    mod udssm2 {}
    #[doc = include_str!("../../../book/src/training.md")]
    mod training {}
    #[doc = include_str!("../../../book/src/evaluation.md")]
    mod evaluation {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
