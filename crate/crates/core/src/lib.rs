//! Symbolic bounds on counterfactual probabilities in discrete causal models
//! with hidden variables.
//!
//! The pipeline: parse a graph ([`graph`]), project it to an ADMG, reason
//! about which counterfactual events can co-occur ([`events`]), bound a
//! non-identified query by identified pieces ([`bounds`], [`identify`]), and
//! derive testable inequality constraints ([`inequalities`]). The [`oracle`]
//! module samples explicit structural models to check all of it.

pub mod error;
pub mod events;
pub mod graph;
pub mod identify;
pub mod inequalities;
pub mod models;
pub mod bounds;
pub mod oracle;

pub use error::{Error, ParseError, Result};
