//! Named experiments, configuration and result emission.

pub mod config;
pub mod experiments;
pub mod report;

pub use config::{parse_config, parse_points, ExperimentConfig, ExperimentId, Format, Overrides};
pub use experiments::run_experiment;
pub use report::{emit, Cell, ExperimentResult, Kind, Table, Verdict};
