//! Structure-preserving solver laboratory for the BBM equation and its
//! first-order hyperbolic approximation (BBMH).
//!
//! The crate provides periodic upwind SBP operators, circulant-banded stage
//! solvers, the BBM/BBMH semidiscretizations with their conserved functionals,
//! additive IMEX Runge-Kutta integration with invariant-preserving relaxation,
//! solitary-wave construction (closed form, Petviashvili iteration, traveling
//! wave ODE), and the experiment drivers behind the `bbmh` CLI.

pub mod experiments;
pub mod imex;
pub mod linsolve;
pub mod models;
pub mod sbp;
pub mod waves;

mod error;

pub use error::Error;

pub type Result<T> = std::result::Result<T, Error>;
