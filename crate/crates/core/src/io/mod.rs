//! Configuration, experiment orchestration and result files.

pub mod config;
pub mod experiments;
pub mod output;

pub use config::Config;
pub use experiments::{run, RunContext, Subcommand};
pub use output::{parse_manifest, verify_manifest, RunManifest};
