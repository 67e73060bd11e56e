//! Experiment runner for the `rc-glauber` toolkit: JSON specs in, CSV rows
//! and JSON summaries out, one content-addressed directory per run.

pub mod error;
pub mod output;
pub mod run;
pub mod spec;

pub use error::CliError;
pub use run::{run, RunOutput};
pub use spec::{BcSpec, ExperimentSpec, Kind};
