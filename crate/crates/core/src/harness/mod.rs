//! Monte Carlo suites, the queue scaling demo, reports and the CLI.

pub mod cli;
pub mod config;
pub mod queue;
pub mod report;
pub mod stats;
pub mod suites;

pub use config::{ConfigFile, ExperimentConfig, ExperimentKind, OutputFormat};
pub use queue::queue_scaling_demo;
pub use report::{Check, ExperimentReport, ReplicationRow, Summary, Table};
pub use stats::{ks_normal, ks_two_sample};
pub use suites::{run_girsanov_suite, run_mle_suite, run_sequential_suite, run_suite};
