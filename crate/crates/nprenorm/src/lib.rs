//! Numerics for near-parabolic renormalization of quadratic maps with a
//! neutral fixed point.

pub mod arith;
pub mod bigc;
pub mod cli;
pub mod dynamics;
pub mod error;
pub mod fatou;
pub mod heights;

pub use bigc::BigComplex;
pub use error::{Error, Result};
