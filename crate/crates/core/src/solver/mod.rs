//! Characteristic solver for the damped moving-boundary wave problem.

pub mod charfn;
pub mod duhamel;
pub mod fd;
pub mod field;
pub mod tracer;
pub mod coupled;
pub mod compare;

pub use coupled::{solve_coupled, solve_parts, SolveOptions, Solution};
