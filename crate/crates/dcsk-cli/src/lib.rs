//! Experiment runner for the buffer-aided DCSK-SWIPT relay: config loading,
//! figure presets, parallel sweeps and CSV/JSON output.

pub mod config;
pub mod presets;
pub mod runner;

pub use config::{ConfigError, Curve, ExperimentConfig, Metric, Overrides, Sweep, SweepVar};
pub use runner::{run_experiment, CurvePoint, Manifest, RunError, RunSummary};
