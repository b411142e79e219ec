//! Consistency-based diagnosis by compiling structured system descriptions
//! into decomposable negation normal form.
//!
//! The pipeline is: parse a [`ssd::Ssd`] and an observation, build a
//! [`jointree::Jointree`] over its structure, compile the consequence of the
//! observation ([`compile`]), then extract the cost-minimal diagnoses from it
//! ([`diagnose`]). The [`oracle`] module recomputes the same answers by brute
//! force.

pub mod compile;
pub mod diagnose;
pub mod error;
pub mod generate;
pub mod jointree;
pub mod logic;
pub mod nnf;
pub mod oracle;
pub mod pipeline;
pub mod ssd;

pub use error::{Error, Result};
