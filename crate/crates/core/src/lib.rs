//! Subgraph-based sybil address detection.
//!
//! The pipeline runs in five stages:
//!
//! 1. [`ingest`] parses transfer records and address labels and applies the
//!    cleaning rules that decide which addresses are detection candidates.
//! 2. [`graph`] builds an immutable transaction multigraph and extracts the
//!    two-layer inflow/outflow neighbourhood around each candidate.
//! 3. [`features`] turns each neighbourhood into a fixed 75-slot vector of
//!    lifecycle-time, fused-amount and network-structure features.
//! 4. [`model`] trains a histogram-based gradient-boosted tree classifier (and
//!    a single CART baseline) on those vectors.
//! 5. [`eval`] reports precision, recall, F1 and ROC AUC on a held-out split.
//!
//! [`synth`] generates seeded datasets with planted star, chain and tree sybil
//! clusters, and [`pipeline`] wires the stages together over files.

pub mod eval;
pub mod features;
pub mod graph;
pub mod ingest;
pub mod model;
pub mod pipeline;
pub mod seed;
pub mod synth;
