//! Finite-dimensional tools for Schur-class functions: positive and completely
//! positive kernels, colligation realizations via the lurking isometry,
//! functional calculus at operator arguments, noncommutative formal power
//! series, and time-varying systems on finite windows.

pub mod error;
pub mod freeseries;
pub mod funccalc;
pub mod kernels;
pub mod matops;
pub mod random;
pub mod realization;
pub mod tvsystems;

pub use error::{Error, Result};
