//! Scenario runner for `heatpoint-core`: TOML scenarios in, deterministic CSV and
//! JSON artifacts out, with rayon-parallel assembly and sampling.

#![warn(missing_docs)]

pub mod cache;
pub mod format;
pub mod parallel;
pub mod run;
pub mod scenario;

pub use run::{run, RunOptions, RunReport};
pub use scenario::{parse_scenario, serialize_scenario, Scenario, ScenarioError};
