//! Reflected fractional Ornstein-Uhlenbeck processes: simulation and
//! maximum-likelihood drift estimation for any Hurst index.

pub mod error;
pub mod fgn;
pub mod fraccalc;
pub mod harness;
pub mod infer;
pub mod quad;
pub mod reflect;
pub mod special;

pub use error::{Error, Result};
