//! Reporting, verification suite, and command-line front end over
//! `penalise-core`.

pub mod commands;
pub mod config;
pub(crate) mod parallel;
pub mod report;
pub mod verify;

pub use config::RunConfig;
pub use verify::{run_suite, CheckResult, SuiteConfig, Verdict};
