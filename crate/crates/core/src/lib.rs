//! flowcert certifies safety of hybrid systems whose differential rules
//! carry interval coefficients. Candidate polynomial invariants are found
//! numerically by SOS relaxation and then proved exactly: coefficients are
//! recovered as rationals and every verification condition is discharged
//! either through the Rohn positive-semidefiniteness test on an interval
//! Gram matrix or through a Krawczyk-style root-existence argument.
//! Non-polynomial dynamics are first enclosed by interval polynomial
//! systems with verified approximation error bounds, so the same pipeline
//! applies.
//!
//! The crate is organized in layers:
//!
//! - [`rational`], [`interval`], [`linalg`]: exact arithmetic substrate.
//! - [`poly`]: sparse interval polynomials and the Gram linearization.
//! - [`sdp`], [`ratcert`]: the numeric phase and its exact rationalization.
//! - [`psd`]: certification that an interval polynomial is nonnegative.
//! - [`approxpoly`]: rigorous polynomial enclosure of non-polynomial terms.
//! - [`model`], [`pipeline`]: hybrid-system descriptions and the end-to-end
//!   synthesize/certify/check flow behind the CLI.

pub mod error;
pub mod rational;
pub mod interval;
pub mod linalg;
pub mod poly;
pub mod krawczyk;
pub mod sdp;
pub mod ratcert;
pub mod psd;
pub mod approxpoly;
pub mod model;
pub mod pipeline;

pub use error::{Error, Result};
