// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod cli;
pub mod config;
pub mod continuation;
pub mod error;
pub mod kernel;
mod linalg;
pub mod nonlinearity;
pub mod output;
mod quadrature;
pub mod spectral;
pub mod steady;

pub use error::{Error, Result};
