//! Experiment harness for the CF-ISAC models in `cfisac-core`: spec files,
//! the named case-study pipelines, result tables (CSV/JSON), channel dumps
//! and the `cfisac` command-line tool.

// `!(x > 0.0)` is the NaN-rejecting form used by the spec checks.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dump;
pub mod error;
pub mod experiments;
pub mod parallel;
pub mod reports;
pub mod spec;
pub mod table;

pub use error::{HarnessError, Result};
pub use experiments::run_experiment;
pub use spec::{ExperimentName, ExperimentSpec};
pub use table::ResultTable;
