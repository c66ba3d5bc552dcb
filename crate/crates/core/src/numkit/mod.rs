//! Minimal dense numeric core: matrices, affine layers, SGD and finite-difference checks.

mod gradcheck;
mod layer;
mod matrix;
mod sgd;

pub use gradcheck::{grad_check, GradCheckReport, DEFAULT_EPSILON};
pub use layer::{
    affine_backward, affine_backward_cached, affine_forward, Activation, DenseLayer, LayerGrad,
};
pub use matrix::{dot, l2_norm, lp_norm, Matrix};
pub use sgd::{sgd_step, GradSet};
