//! Hypocoercive mixing-time certificates for finite-dimensional Lindbladians.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod audit;
pub mod certifier;
pub mod dynamics;
pub mod error;
pub mod expm;
pub mod gns;
pub mod linalg;
pub mod lindblad;
pub mod models;
pub mod pauli;

pub use error::{Error, Result};
