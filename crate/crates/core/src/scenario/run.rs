//! Executing a config: build the space, sweep the sample, time it.

use std::path::Path;
use std::time::Instant;

use crate::check::Tolerances;
use crate::diff::DiffScheme;
use crate::error::GeomError;
use crate::scenario::config::{parse_config, ConfigError, ScenarioConfig};
use crate::scenario::registry::{build_space, lookup};
use crate::scenario::report::Report;
use crate::verify::{verify_scenario, VerifyPlan};

/// Caps the number of worker threads when set to a positive integer.
pub const THREADS_ENV: &str = "OBATA_LAB_THREADS";

/// Anything that stops a run from producing a verdict.
#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("construction failed: {0}")]
    Geometry(#[from] GeomError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("thread pool: {0}")]
    Threads(String),
}

/// Reads a scenario file and applies `key=value` overrides.
pub fn load_config<S: AsRef<str>>(
    path: &Path,
    overrides: &[S],
) -> Result<ScenarioConfig, RunError> {
    let text = std::fs::read_to_string(path).map_err(|source| RunError::Io {
        path: path.display().to_string(),
        source,
    })?;
    Ok(parse_config(&text)?.with_overrides(overrides)?)
}

/// `OBATA_LAB_THREADS` as a positive count; anything else means no cap.
pub fn thread_limit_from_env() -> Option<usize> {
    std::env::var(THREADS_ENV)
        .ok()?
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
}

pub fn run(config: &ScenarioConfig) -> Result<Report, RunError> {
    run_with_threads(config, thread_limit_from_env())
}

/// Runs on a dedicated pool of `threads` workers, or on the global pool.
/// The report does not depend on the worker count.
pub fn run_with_threads(
    config: &ScenarioConfig,
    threads: Option<usize>,
) -> Result<Report, RunError> {
    match threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| RunError::Threads(e.to_string()))?
            .install(|| run_here(config)),
        None => run_here(config),
    }
}

fn run_here(config: &ScenarioConfig) -> Result<Report, RunError> {
    let start = Instant::now();
    let entry = lookup(&config.scenario).ok_or_else(|| ConfigError::UnknownScenario {
        name: config.scenario.clone(),
        at: crate::scenario::config::Location::Document,
    })?;
    let resolved = config.resolved();
    let space = build_space(entry, &resolved.parameters)?;
    let scheme = DiffScheme::new(config.fd_step, config.richardson)?;
    let mut tolerances = Tolerances::new();
    for (c, t) in &config.tolerances {
        tolerances.set(*c, *t);
    }
    let plan = VerifyPlan {
        samples: config.samples,
        seed: config.seed,
        tolerances,
        checks: config.checks.clone(),
    };
    let verdict = verify_scenario(&space, &plan, &scheme)?;
    let wall_time_ms = start.elapsed().as_millis() as u64;
    Ok(Report::new(resolved, verdict, wall_time_ms))
}
