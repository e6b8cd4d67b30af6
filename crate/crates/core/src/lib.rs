//! Adaptive basal-bolus insulin advisor and the in-silico laboratory around it.
//!
//! - [`patient`]: virtual-patient glucose–insulin simulator and cohorts
//! - [`advisor`]: the seven-agent actor-critic advisor and the static comparator
//! - [`init`]: data collection, transfer-entropy initialisation, hyperparameters
//! - [`protocol`]: scenarios, daily schedules and the trial engine
//! - [`analytics`]: glycaemic metrics and paired statistics
//! - [`cli`]: configuration, batch runs, replay and reports

pub mod advisor;
pub mod analytics;
pub mod cli;
pub mod error;
pub mod init;
pub mod patient;
pub mod protocol;
pub mod seed;

pub use error::{Error, Result};
