//! Circuit synthesis and verification for Kitaev-Webb Gaussian state
//! preparation.
//!
//! The crate is layered bottom-up:
//!
//! * [`reference_math`] evaluates the lattice normalization `f(mu, sigma)`,
//!   rotation angles, exact and optimal target states, LDL-type
//!   factorizations and the angle-approximation plans.
//! * [`circuit`] holds the gate-list IR, CNOT accounting, text export and the
//!   sparse statevector simulator.
//! * [`qarith`] builds reversible fixed-point arithmetic on top of the IR.
//! * [`kw1d`] assembles the recursive 1D preparation circuit.
//! * [`shear`] assembles the N-dimensional coordinate shear.
//! * [`baseline`] is the exponential uniformly-controlled rotation tree used
//!   for comparison.

pub mod baseline;
pub mod circuit;
pub mod error;
pub mod fixed;
pub mod kw1d;
pub mod qarith;
pub mod reference_math;
pub mod shear;

pub use error::{Error, Result};
