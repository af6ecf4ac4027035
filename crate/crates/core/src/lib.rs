//! Exterior plane elastostatics: single-layer boundary elements for constant
//! tensors, a polar-annulus variational solver for inhomogeneous ones, and the
//! radial counter-example family used as ground truth.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod annulus;
pub mod bem;
pub mod cli;
pub mod degiorgi;
pub mod error;
pub mod gym;
pub mod quad;
pub mod tensor;

pub use error::{Error, Result};
