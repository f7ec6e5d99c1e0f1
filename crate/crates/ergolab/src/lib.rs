//! Numerical laboratory for non-uniformly expanding dynamics.
//!
//! The crate is organized around five subsystems:
//!
//! * [`dynamics`] - phase points, map families (circle covers, real quadratic
//!   maps, Viana skew products, full shifts), orbits, metrics, inverse
//!   branches.
//! * [`hyperbolic`] - Pliss-style hyperbolic time detection, pre-balls and
//!   dynamical balls, backward-contraction verification, orbit classification
//!   by hyperbolic-time frequency, slow-approximation averages.
//! * [`potentials`] - observables: constants, analytic test families,
//!   bump-pair potentials with uniformly bounded Birkhoff sums, word-prefix
//!   tables for shift systems.
//! * [`pressure`] - topological pressure estimators: greedy separated sets
//!   with growth-rate extrapolation, and an exact cylinder-cover infimum on
//!   full shifts with a bisection solver for the critical exponent.
//! * [`transfer`] - Ulam-type transfer operator discretizations, power
//!   iteration, spectral pressure, and maximal-entropy densities.
//!
//! All randomized routines take explicit seeds and use a counter-based
//! generator, so every result is reproducible bit-for-bit regardless of
//! thread count.

pub mod dynamics;
pub mod error;
pub mod hyperbolic;
pub mod numeric;
pub mod potentials;
pub mod pressure;
pub mod transfer;

pub use error::{Error, Result};
