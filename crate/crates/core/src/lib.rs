//! Spectral toolkit for the fractional Dirichlet Laplacian `(-Δ)^s` on the unit ball.
//!
//! The crate is organised bottom-up:
//!
//! * [`quadrature`] evaluates the singular-kernel forms directly and serves as
//!   the ground-truth oracle for everything else.
//! * [`radial`] builds the weighted Jacobi Galerkin basis for radial problems in
//!   an effective dimension `d` and solves the generalized eigenproblem.
//! * [`spectrum`] assembles the full ball spectrum from the angular decomposition.
//! * [`semilinear`] computes radial sign-changing solutions of `(-Δ)^s u = f(u)`.
//! * [`morse`] counts negative eigenvalues of the linearization and builds the
//!   odd test functions `d_j`.
//! * [`acceptance`] runs the end-to-end verification campaign.

pub mod acceptance;
pub mod error;
pub mod morse;
pub mod nonlinearity;
pub mod params;
pub mod quadrature;
pub mod radial;
pub mod semilinear;
pub mod special;
pub mod spectrum;

pub use error::{Error, Result};
pub use nonlinearity::NonlinearitySpec;
pub use params::ProblemParams;
