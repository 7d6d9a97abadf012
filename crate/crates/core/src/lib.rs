//! Side-by-side simulation of gravity-related collapse and decoherence models.
//!
//! The crate covers noise kernels (Karolyhazy, Diósi, Adler, Tilloy–Diósi),
//! closed-form decoherence times (Karolyhazy, Diósi–Penrose, Penrose),
//! master-equation engines on a finite pointer basis and for the
//! Kafri–Taylor–Milburn oscillator pair, stochastic unravelings, a
//! Schrödinger–Newton solver and the experimental bounds on the Diósi–Penrose
//! regularization radius.

// Validation is written as `!(x > 0.0)` on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod cli;
pub mod error;
pub mod kernels;
pub mod lindblad;
pub mod physcore;
pub mod rates;
pub mod snsolver;
pub mod unravel;

pub use error::{Error, Result};
pub use physcore::{Constants, MassDensity};
