//! Human-in-the-loop AutoML engine.
//!
//! Data flows from [`data`] (ingestion, profiling, preparation) through a
//! [`problem`] specification into [`search`], which synthesizes
//! [`pipeline`]s from [`primitives`] and scores them with [`evaluation`].
//! Scored solutions are inspected with [`explain`], and the dataset can be
//! enlarged from a local corpus with [`augment`] before searching again.

pub mod augment;
pub mod data;
pub mod demo;
pub mod evaluation;
pub mod explain;
pub mod learn;
pub mod pipeline;
pub mod primitives;
pub mod problem;
pub mod scalar;
pub mod search;
pub mod stats;

/// Floating-point type of datasets, pipelines and reports.
pub type Real = f64;
