//! Experiment driver: configuration, the subcommands, and everything they
//! write to disk.

pub mod bench;
pub mod config;
pub mod experiments;
pub mod manifest;
pub mod output;
pub mod render;

pub use config::ExperimentConfig;
pub use experiments::{
    cmd_ablation, cmd_benchmark_integrators, cmd_mixing, cmd_train_classifier, resolve,
};
pub use manifest::RunManifest;
