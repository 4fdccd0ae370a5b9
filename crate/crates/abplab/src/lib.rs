//! Batch harness around `abplab-core`: config parsing, suite runners, and
//! the JSON/CSV report writers used by the `abplab` binary.

pub mod config;
pub mod forms;
pub mod gridio;
pub mod reportio;
pub mod suites;
