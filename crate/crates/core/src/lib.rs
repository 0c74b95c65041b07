//! Corrected (signed) Poisson approximations to sums of independent indicators.
//!
//! The crate builds the Poisson-binomial law exactly, constructs signed
//! Poisson measures whose factorial moments match it to a chosen order,
//! measures distances between the two, and checks the accompanying moment
//! inequalities and error bounds numerically.

// `!(x > 0.0)` is used on purpose so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod charlier;
pub mod corrected;
pub mod distances;
pub mod error;
pub mod exact;
pub mod hiprec;
pub mod json;
pub mod pmf;
pub mod sum;

pub use error::{Error, Result};
pub use pmf::{FactorialMoments, PowerSums, ProbVector, SignedPmf};
