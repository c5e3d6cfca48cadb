//! Monte Carlo driver, file formats and reference oracles for
//! `nrtsave-core`.

pub mod config_file;
pub mod error;
pub mod experiment;
pub mod oracle;
pub mod output;
pub mod sched_check;

pub use config_file::{load_config, parse_config, RunConfig};
pub use error::SimError;
pub use experiment::{run_experiment, ExperimentResult};
