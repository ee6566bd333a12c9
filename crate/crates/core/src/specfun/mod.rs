//! Special functions used by the closed-form kernels: integer-order Bessel
//! functions of the first kind and their two-index, three-argument
//! generalization, with an independent generating-function oracle.

use thiserror::Error;

pub mod bessel;
pub mod genfun;
pub mod two_index;

pub use bessel::{ascending_series, bessel_j, bessel_j_sequence};
pub use genfun::{generating_function_coefficients, two_index_bessel_oracle, CoefficientTable, OracleValue};
pub use two_index::{
    recurrence_residual_with, two_index_bessel, two_index_recurrence_residual, TwoIndexBesselValue,
};

#[derive(Debug, Error)]
pub enum SpecFunError {
    #[error("domain error: {0}")]
    Domain(String),
}
