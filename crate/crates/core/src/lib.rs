#![allow(clippy::neg_cmp_op_on_partial_ord)]
pub mod error;
pub mod harness;
pub mod inequalities;
pub mod lattice;
pub mod nbody;
pub mod oddsector;
pub mod potentials;
pub mod quadrature;
pub mod twobody;

pub use error::{Error, Result};
