//! Multi-band microstrip patch design by uniform cross-entropy search.
//!
//! A five-parameter cut-out patch ([`geometry`]) is simulated with a
//! rooftop moment-method solver ([`em_mom`]), scored against a target S11
//! curve ([`loss`]) and optimized with uniform cross-entropy sampling
//! ([`uce`]). [`baselines`] provides random, Gaussian-process and
//! tree-ensemble comparison optimizers, and [`harness`] wires everything into
//! restartable runs and benchmark tables.

pub mod em_mom;
pub mod baselines;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod loss;
pub mod uce;

pub use error::{Error, Result};
