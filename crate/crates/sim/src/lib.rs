//! Scenario loading, mode dispatch and file outputs for the planners in
//! `inspect-core`.

pub mod checks;
pub mod error;
pub mod run;
pub mod scenario;

pub use error::SimError;
pub use run::{plan_file, run, MissionReport, Overrides, OUT_DIR_ENV};
pub use scenario::{load_scenario, parse_scenario, Mode, Scenario};

/// JSON schema of scenario files.
pub fn scenario_schema() -> serde_json::Value {
    serde_json::to_value(schemars::schema_for!(Scenario)).expect("schema serializes")
}
