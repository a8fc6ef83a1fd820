//! Exact simulation laboratory for update scheduling on a single link
//! under the age-of-information objective.
//!
//! Everything is computed in arbitrary-precision rational arithmetic:
//! traces, age integrals, per-update metrics, and competitive ratios
//! are exact values, and every regression assertion is an equality.

pub mod aoi;
pub mod engine;
pub mod generators;
pub mod harness;
pub mod io;
pub mod model;
pub mod oracle;
pub mod policies;
pub mod ratio;
