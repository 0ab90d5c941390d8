//! Rank fusion and retrieval evaluation toolkit for bibliometric re-ranking
//! experiments.
//!
//! The crate covers the full loop of a metadata-driven re-ranking study on
//! TREC-style collections:
//!
//! * [`trec`] — strict parsing and writing of runs and qrels with a single
//!   canonical ordering rule.
//! * [`biblio`] — per-document bibliometric metadata (citations, altmetrics,
//!   publication year, research level, impact factor), query-agnostic signal
//!   rankings, candidate pools, and coverage reporting.
//! * [`fusion`] — reciprocal rank fusion, Borda counting, a trained
//!   log-likelihood-ratio combiner, and weighted score combination with
//!   min-max normalization.
//! * [`metrics`] — recall, precision, average precision, nDCG, bpref, and
//!   rank-biased precision, plus batch evaluation into CSV reports.
//! * [`stats`] — paired Fisher randomization testing (Monte-Carlo and exact)
//!   and per-system improvement summaries.
//! * [`experiment`] — reproducible end-to-end pipelines behind the command
//!   line interface: coverage tables, per-signal evaluation, subset sweeps,
//!   year-level fusion with significance testing, score-distribution curves,
//!   and patience-parameter sweeps.
//!
//! Every pipeline is deterministic: given the same inputs and seed, output
//! files are byte-identical across repeat invocations.
//!
//! The `examples/` directory contains one runnable walkthrough per
//! capability; start with `parse_and_evaluate` and `fusion_methods`.

pub mod biblio;
pub mod error;
pub mod experiment;
pub mod fusion;
pub mod metrics;
pub mod stats;
pub mod trec;

pub use error::{Error, Result};
pub use trec::{DocId, Qrels, RankedList, Run};
