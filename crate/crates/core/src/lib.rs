//! Laboratory for adversarial lower-bound experiments on deterministic
//! metric 1-median selection.
//!
//! The crate provides:
//!
//! - [`metric`]: point/distance domain types, query bookkeeping, metric
//!   validation and exact median computation;
//! - [`adversary`]: the online distance-freezing adversary, metric
//!   completion and per-run audited cost bounds;
//! - [`algorithms`]: deterministic baseline algorithms behind a
//!   query-counting oracle;
//! - [`recovery`]: shortest-path completion of partially observed metrics
//!   and its exact inequality chain;
//! - [`harness`]: single runs, parameter sweeps, replay checks and flat
//!   record export.
//!
//! All thresholds and ratios are exact rationals; nothing here uses
//! floating point for a decision.

pub mod adversary;
pub mod algorithms;
pub mod harness;
pub mod metric;
pub mod rational;
pub mod recovery;
