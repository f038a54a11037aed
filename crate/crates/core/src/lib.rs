//! Numerical workbench for concentration inequalities of matrix
//! martingales in finite-dimensional tracial probability spaces.
//!
//! The crate models a matrix probability space (Hermitian matrices with
//! the normalized trace), tensor-product filtrations with conditional
//! expectations, adapted operator sequences, and the projection lattice
//! used to phrase maximal tail events. On top of that it evaluates
//! Blackwell-Ross and Azuma-type trace bounds for the tail probabilities
//! of (super)martingale crossing events, and verifies them against exact
//! dynamic-programming enumeration and seeded Monte Carlo simulation.
//!
//! Module map:
//! * [`operator`]: Hermitian operators, spectral decomposition, functional
//!   calculus, spectral projections, the Golden-Thompson gap;
//! * [`space`]: tensor-product spaces, filtrations, conditional
//!   expectations, independent-sum constructions;
//! * [`martingale`]: adapted sequences, classification, difference bounds,
//!   moment-generating-function envelopes, bound parameters;
//! * [`chains`]: seeded constructions of diagonal and conjugated chains;
//! * [`sample`]: deterministic random matrix generators;
//! * [`lattice`]: join/meet/order on projections and maximal tail events;
//! * [`bounds`]: closed-form tail bounds and end-to-end verification;
//! * [`mcsim`]: scalar crossing probabilities, exact and simulated.

pub mod bounds;
pub mod chains;
pub mod error;
pub mod lattice;
pub mod martingale;
pub mod mcsim;
pub mod operator;
pub mod sample;
pub mod space;

pub use error::{Error, Result};
