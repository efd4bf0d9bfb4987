//! Random walks in moderately sparse random environments: simulation of the
//! walk, its branching representation and regeneration structure, the
//! closed-form quantities, and statistical checks of the limit laws.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytics;
pub mod branching;
pub mod critgw;
pub mod env;
pub mod error;
pub mod harness;
pub mod numeric;
pub mod rng;
pub mod walk;
pub mod sampling;
pub mod stablelaws;

pub use error::{Error, Result};
