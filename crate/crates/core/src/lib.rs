//! Bibliometric novelty indicators from journal co-citation data, plus the
//! regression harness used to validate them against expert assessments.
//!
//! Pipeline: ingest a citation corpus ([`corpus`]), build year-partitioned
//! co-citation indexes ([`cocite`]), compute the U/W/K indicators
//! ([`scores`]), and fit count/binary regressions with robust standard
//! errors ([`glm`]) orchestrated end to end by [`study`].

pub mod cocite;
pub mod corpus;
pub mod error;
pub mod glm;
pub mod order_stats;
pub mod scores;
pub mod stats;
pub mod study;

#[cfg(test)]
pub(crate) mod testutil;

pub use error::{Error, Result};
