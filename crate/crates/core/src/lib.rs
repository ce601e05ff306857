//! Synthesis of multi-beam phased arrays from generalized scattering
//! matrices of coupled antenna elements.

pub mod chebyshev;
pub mod coupled;
pub mod dataset;
pub mod error;
pub mod linalg;
pub mod manifolds;
pub mod optimizer;
pub mod pattern;
pub mod realization;
pub mod toyem;

pub use error::{Error, Result};
