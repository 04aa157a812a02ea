//! Joint long-term IRS tuning and short-term WMMSE precoding by inexact
//! zeroth-order stochastic quasi-gradient ascent.
//!
//! The crate is organised bottom-up:
//!
//! - [`channel`] samples Rician states of nature and composes the IRS-shaped
//!   effective channel,
//! - [`sumrate`] evaluates the weighted sumrate and its Wirtinger co-gradient,
//! - [`wmmse`] is the inexact precoding oracle,
//! - [`zo`] builds the two-point quasi-gradient,
//! - [`izosga`] is the projected ascent loop,
//! - [`diagnostics`] estimates Moreau-envelope stationarity and ε̄,
//! - [`harness`] runs seeded experiments and writes CSV, manifests and plots.

pub mod channel;
pub mod config;
pub mod diagnostics;
pub mod error;
pub mod harness;
pub mod izosga;
pub mod rng;
pub mod stats;
pub mod sumrate;
#[doc(hidden)]
pub mod testing;
pub mod wmmse;
pub mod zo;

pub use error::{Error, Result};
