//! Command-line front end and file formats for `volterra-core`.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod error;
pub mod experiments;
pub mod presets;
pub mod report;
pub mod runner;

pub use config::{Experiment, ExperimentConfig, Params};
pub use error::{LabError, LabResult};
pub use report::ReportRow;
