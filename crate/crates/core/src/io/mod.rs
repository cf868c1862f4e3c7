//! Configuration, run artifacts, charts and run comparison.

pub mod analysis;
pub mod charts;
pub mod compare;
pub mod config;
pub mod output;
pub mod run;

pub use config::{PolicyKind, ScenarioConfig, SnapshotMode};
pub use output::{Manifest, PacketSummary};
pub use run::{build_policy, run_scenario, RunReport};
