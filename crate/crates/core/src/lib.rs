//! Canonical duality for problems of the form `q(x) + V(Λ(x))` under
//! equality and inequality constraints of the same form.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod audit;
pub mod dual;
pub mod error;
pub mod lagrangian;
pub mod problem;
pub mod report;
pub mod scalar;
pub mod solver;

pub use error::{CdtError, Result};
