#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod model;

pub use error::{DebondError, Result};
pub mod energy;
pub mod front;
pub mod solver;
pub mod quasistatic;
pub mod experiments;
