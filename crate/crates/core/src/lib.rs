//! Cross-layer path selection for a two-path (WiFi + LTE) multipath transport.
//!
//! The crate is organised as a pipeline:
//!
//! * [`traceio`]: raw measurement schema, CSV traces and scripted mobility scenarios.
//! * [`featstats`]: binning, percentiles, Kendall tau-b and conditional information gain.
//! * [`dataset`]: pairing WF/LF rows into labeled classification records.
//! * [`treelearn`]: information-gain-ratio trees, forests, pruning and k-fold evaluation.
//! * [`selector`]: the runtime policy engine (SmartPS plus MinRTT/RR/static baselines).
//! * [`netsim`]: a deterministic tick-based simulator of a two-subflow connection.
//! * [`experiment`]: scenario suites and the policy comparisons built on top of `netsim`.

pub mod dataset;
pub mod experiment;
pub mod featstats;
pub mod netsim;
pub mod rng;
pub mod selector;
pub mod traceio;
pub mod treelearn;

pub use traceio::{AttributeSample, Priority};
