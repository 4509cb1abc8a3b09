//! Config-driven runner for `collapse-lab` scenarios.
//!
//! A scenario is a JSON file naming one of five kinds (`cmo-probe`,
//! `two-measurement`, `classical-check`, `coherence-audit`, `qubit-sweep`)
//! plus the state, observables and settings it needs. Running it produces a
//! [`RunReport`] of numeric tables that can be written as JSON or CSV.

pub mod config;
pub mod error;
pub mod report;
pub mod run;

pub use config::{load_config, OutputFormat, ScenarioConfig, ScenarioKind};
pub use error::{CliError, Result};
pub use report::{emit, RunReport, Table};
pub use run::{run, run_with_workers, worker_count};
