//! Matrix Laurent polynomials, rational functions and their evaluation on the unit circle.

mod grid;
mod matrix;
mod poly;
mod rational;
mod transfer;

pub use grid::{GridValues, UnitCircleGrid};
pub use matrix::{CMatrix, LaurentMatrix};
pub use poly::{winding_by_phase, LaurentPoly, Location, Root, RootSet};
pub use rational::{project_minus_quotient, series_quotient, Expansion, RationalMatrix, ScalarRational};
pub use transfer::TransferFunction;


/// Coefficients with Frobenius norm below this are pruned from the ends of a series.
pub const DROP_TOL: f64 = 1e-13;
/// Roots within this distance of the unit circle are treated as lying on it.
pub const CIRCLE_TOL: f64 = 1e-9;
/// Roots closer than this (relative) are merged into one root with multiplicity.
pub const CLUSTER_TOL: f64 = 1e-7;
/// Number of points of the standard quadrature and sup-norm grid.
pub const GRID_N: usize = 4096;

/// Shorthand for a real number as a complex coefficient.
pub fn c64(re: f64) -> num_complex::Complex64 {
    num_complex::Complex64::new(re, 0.0)
}
