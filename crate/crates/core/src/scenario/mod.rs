//! Scenario files, the built-in registry, runs and their reports.

pub mod config;
pub mod registry;
pub mod report;
pub mod run;

pub use config::{parse_config, ConfigError, Location, Parameters, ScenarioConfig};
pub use registry::{build_space, lookup, Family, ScenarioEntry, SCENARIOS};
pub use report::{
    emit_report, parse_report, report_file_name, write_reports, Format, Report, Verdict,
};
pub use run::{load_config, run, run_with_threads, thread_limit_from_env, RunError, THREADS_ENV};
