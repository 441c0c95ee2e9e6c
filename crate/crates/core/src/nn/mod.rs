//! Minimal dense numerical kernel for single-layer LSTM sequence models.
//!
//! Model arithmetic is `f64`. [`DoubleDouble`] exists only so gradient
//! checks can take finite differences without `f64` roundoff.

mod adadelta;
mod bptt;
mod ddouble;
mod gradcheck;
mod lstm;
mod matrix;
mod softmax;

pub use adadelta::{adadelta_update, AdaDelta, AdaDeltaState};
pub use bptt::{backward, forward_sequence, SequenceCache, SequenceGrads};
pub use ddouble::DoubleDouble;
pub use gradcheck::{grad_check, GradCheckOptions, GradCheckReport, GradientCheckable};
pub use lstm::{lstm_step, Gate, LstmParams, LstmState};
pub use matrix::Matrix;
pub use softmax::{clamped_nll_count, nll_loss, softmax, softmax_layer, SoftmaxParams, NLL_FLOOR};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NnError {
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("shape mismatch in {what}: expected {expected}, got {got}")]
    Shape {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}
