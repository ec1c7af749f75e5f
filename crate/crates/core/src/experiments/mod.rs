//! Scenario configuration, the simulation loop, log output and the CLI.

pub mod cli;
pub mod config;
pub mod log;
pub mod runner;

pub use config::{EnvSpec, LogFormat, MemberSpec, MixtureSpec, ScenarioConfig};
pub use log::{format_g12, read_csv, write_log, LogRow, TrajectoryLog};
pub use runner::{run_scenario, validate_config};

use crate::error::{Error, Result};

/// Built-in scenarios as `(name, embedded TOML)`.
pub const SCENARIOS: &[(&str, &str)] = &[
    (
        "self-preserve",
        include_str!("scenarios/self-preserve.toml"),
    ),
    ("suicide", include_str!("scenarios/suicide.toml")),
    ("posterior", include_str!("scenarios/posterior.toml")),
    ("immortality", include_str!("scenarios/immortality.toml")),
    ("safe", include_str!("scenarios/safe.toml")),
    ("learn-safe", include_str!("scenarios/learn-safe.toml")),
];

pub fn scenario_names() -> Vec<&'static str> {
    SCENARIOS.iter().map(|(name, _)| *name).collect()
}

pub fn builtin(name: &str) -> Result<ScenarioConfig> {
    let (_, text) = SCENARIOS.iter().find(|(n, _)| *n == name).ok_or_else(|| {
        Error::Config(format!(
            "unknown scenario {name:?}; available: {}",
            scenario_names().join(", ")
        ))
    })?;
    ScenarioConfig::from_toml(text)
}
