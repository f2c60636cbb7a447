//! Predicts the execution-time impact of pending code updates.
//!
//! The pipeline walks a repository's commit history, freezes a snapshot of
//! the source tree per commit, counts syntax-tree stylometry features over
//! that tree, turns the counts into numeric vectors (a statistical
//! `-log10(count / corpus size)` form or a neural token-embedding form),
//! joins each commit to the measured execution time of its functional test
//! suite, and rolls a regression predictor along history: each commit's
//! vector trains a model that predicts the test time of the commit before
//! it. Per-pair error metrics and their deltas report whether an update
//! improved or degraded predictability of the suite's runtime.

pub mod bench;
pub mod cstyle;
pub mod metrics;
pub mod pipeline;
pub mod predict;
pub mod represent;
pub mod snapshot;
