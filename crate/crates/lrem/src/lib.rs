//! Frequency-domain analysis of linear rational expectations models.
//!
//! A model is a matrix Laurent polynomial `M(z)` acting on transfer functions of the
//! endogenous variables. Existence and uniqueness of stationary solutions are read off
//! the partial indices of a Wiener–Hopf factorization of `M`; non-unique solutions are
//! selected by a Tikhonov or general quadratic penalty; the resulting parameterization
//! is studied through the limiting Gaussian likelihood.
//!
//! The modules build on one another:
//!
//! * [`laurent`]: symbol algebra, roots, winding numbers, grids and transfer functions.
//! * [`whf`]: Wiener–Hopf factorization and spectral factorization.
//! * [`hardy`]: shift, projection and Toeplitz operators on the Hardy space.
//! * [`model`]: model templates and builtins.
//! * [`solver`]: classification and the solution set.
//! * [`regularize`]: minimum-norm and penalized solution selection.
//! * [`likelihood`]: limiting and finite-sample likelihood, simulation and scans.
//! * [`io`]: JSON model files.
//!
//! The guide in `book/` walks through each piece; its code snippets run as doc-tests.

mod banded;
pub mod error;
pub mod hardy;
pub mod io;
pub mod laurent;
pub mod likelihood;
pub mod model;
pub mod regularize;
pub mod solver;
pub mod whf;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/symbols.md")]
    mod symbols {}
    #[doc = include_str!("../../../book/src/factorization.md")]
    mod factorization {}
    #[doc = include_str!("../../../book/src/solving.md")]
    mod solving {}
    #[doc = include_str!("../../../book/src/regularization.md")]
    mod regularization {}
    #[doc = include_str!("../../../book/src/likelihood.md")]
    mod likelihood {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
