// Guards like `!(x > 0.0)` are written that way so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod harness;
pub mod kernel;
pub mod predictor;
pub mod quadrature;
mod series;
pub mod signals;
pub mod spectral;

pub use error::{Error, Result};
