//! Square-free decomposition `n = a^2 b` through class groups of imaginary
//! quadratic orders.
//!
//! A random form of `C(-4ns)` is powered to a smooth exponent, lifted to
//! `C(-4nsr^2)` and powered again; the leading coefficient of the result
//! shares the square part of `n` with high probability when the class
//! number of `-4ns` is smooth.

pub mod arith;
pub mod cli;
pub mod error;
pub mod factor;
pub mod forms;
pub mod lift;
pub mod multipliers;
pub mod oracle;

pub use error::{Error, Result};
pub use factor::{sqfree_decompose, DecomposeOptions, DecompositionResult, Stage};
pub use forms::{Discriminant, QuadForm};
