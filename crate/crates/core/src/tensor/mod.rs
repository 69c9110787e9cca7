//! Dense tensors, parameter storage and reverse-mode differentiation.

mod array;
mod gradcheck;
mod graph;
mod params;

pub use array::Tensor;
pub use gradcheck::{
    finite_diff_check, relative_error, GradCheckConfig, GradCheckReport, REL_ERROR_FLOOR,
};
pub use graph::{log_softmax, sigmoid, softmax, Binary, Gradients, Graph, Unary, Var};
pub use params::{ParamId, ParamStore};
