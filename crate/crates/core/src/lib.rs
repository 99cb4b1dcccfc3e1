//! Simulation and analytics for coupled flip-flop approximations of
//! alternating two-dimensional Brownian motions.
//!
//! A standard flip-flop is a piecewise-linear fluid path with slopes
//! `±sqrt(lambda)` driven by a two-state jump process switching at rate
//! `lambda`. This crate couples such paths to Brownian skeletons through
//! Wiener-Hopf draws, alternates a second coordinate between mirroring and
//! copying the first one (driven either by a two-state jump process or by the
//! arrivals of a Markovian arrival process), and provides the matching
//! analytic objects: intensity matrices, correlation functions and
//! Laplace-transformed covariances, together with a Monte Carlo layer that
//! verifies them.
//!
//! Modules:
//! - [`numerics`]: small dense linear algebra, matrix exponentials and
//!   numerical Laplace inversion.
//! - [`sampling`]: reproducible splittable random streams and nested Poisson
//!   arrival families.
//! - [`paths`]: immutable phase, fluid and skeleton path types.
//! - [`flipflop`]: the Wiener-Hopf coupling of a flip-flop with a Brownian
//!   skeleton, and generator builders.
//! - [`exp_alt`]: exponentially alternating construction and its closed-form
//!   correlation.
//! - [`map_alt`]: MAP-driven alternation, phase-type means and transformed
//!   covariances.
//! - [`estimation`]: empirical generators, exact samplers and Monte Carlo
//!   cross-checks.

pub mod estimation;
pub mod exp_alt;
pub mod flipflop;
pub mod map_alt;
pub mod numerics;
pub mod paths;
pub mod sampling;

mod error;

pub use error::{Error, Result};
pub use num_complex::Complex64;
