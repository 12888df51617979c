//! Constructive machinery behind moment-free lower bounds on the smallest
//! singular value of rectangular random matrices `A + B`, plus a seeded
//! Monte Carlo harness.
//!
//! * [`dist`]: entry laws, concentration functions, shift/case selection.
//! * [`bounds`]: anti-concentration inequalities with configurable constants.
//! * [`hpart`]: H-parts and the regular/irregular splitting.
//! * [`detect`]: dyadic interval detection.
//! * [`sphere`]: sphere decomposition, spread witnesses, ε-nets.
//! * [`certify`]: subspace distances, singular values, net certificates.
//! * [`harness`]: trials, tail fits, the end-to-end certifier.

// `!(x > 0.0)` is used on purpose: it rejects NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod certify;
pub mod detect;
pub mod dist;
pub mod error;
pub mod harness;
pub mod hpart;
pub mod io;
pub mod rng;
pub mod sphere;

pub use error::{Error, Result};
