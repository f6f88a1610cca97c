//! Finite-dimensional toolkit for factorisable bimodule quantum channels.

pub mod algebra;
pub mod channel;
pub mod dilation;
pub mod error;
pub mod generate;
pub mod hierarchy;
pub mod matcore;
pub mod rng;
pub mod schur;

pub use error::{Error, Result};
