//! Exact rational combinatorics for the equal-probability (binomial) case.

pub mod gamma;
pub mod poly;
pub mod qpoly;
pub mod stirling;

pub use gamma::{
    compare_with_published, published_column, solve_gamma_table, GammaTable, GammaTableExport,
    TableMismatch, PUBLISHED_TABLE,
};
pub use poly::RationalPolynomial;
pub use qpoly::{c_constant, q_differential_residual, q_polynomial, CConstant};
pub use stirling::{a_polynomial, falling_factorial_remainder, stirling_a, RemainderReport};
