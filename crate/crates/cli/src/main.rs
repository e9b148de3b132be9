use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use obata_lab::scenario::{
    load_config, lookup, run, write_reports, Format, RunError, ScenarioConfig, SCENARIOS,
};

/// Runs a verification scenario and writes its report.
///
/// Exit status: 0 when every check passes, 1 when any check fails,
/// 2 when the scenario cannot be loaded or built.
#[derive(Parser, Debug)]
#[command(name = "obata-lab", version)]
struct Cli {
    /// Scenario file (TOML), or the name of a built-in scenario.
    #[arg(long, required_unless_present = "list_scenarios")]
    scenario: Option<String>,

    /// Directory for `<scenario>-<seed>.json|.md`.
    #[arg(long, default_value = ".")]
    out: PathBuf,

    #[arg(long, value_enum, default_value_t = OutputFormat::Both)]
    format: OutputFormat,

    /// `key=value` with a dotted key, e.g. `parameters.n=3`. Repeatable.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,

    /// Print the built-in scenarios and exit.
    #[arg(long)]
    list_scenarios: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OutputFormat {
    Json,
    Md,
    Both,
}

impl OutputFormat {
    fn formats(self) -> &'static [Format] {
        match self {
            OutputFormat::Json => &[Format::Json],
            OutputFormat::Md => &[Format::Markdown],
            OutputFormat::Both => &[Format::Json, Format::Markdown],
        }
    }
}

fn list() {
    let mut out = std::io::stdout().lock();
    for e in &SCENARIOS {
        let tag = if e.negative_control {
            " [negative control]"
        } else {
            ""
        };
        let _ = writeln!(out, "{:<20} {}{tag}", e.name, e.summary);
    }
}

fn config_for(arg: &str, overrides: &[String]) -> Result<ScenarioConfig, RunError> {
    let path = Path::new(arg);
    if !path.exists() && lookup(arg).is_some() {
        return Ok(ScenarioConfig::new(arg).with_overrides(overrides)?);
    }
    load_config(path, overrides)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.list_scenarios {
        list();
        return ExitCode::SUCCESS;
    }
    let arg = cli.scenario.as_deref().expect("clap requires --scenario");

    let outcome = config_for(arg, &cli.overrides).and_then(|config| {
        let report = run(&config)?;
        let paths = write_reports(&report, &cli.out, cli.format.formats()).map_err(|source| {
            RunError::Io {
                path: cli.out.display().to_string(),
                source,
            }
        })?;
        Ok((report, paths))
    });

    match outcome {
        Ok((report, paths)) => {
            // Write errors on stdout (a closed pipe) do not change the outcome.
            let mut out = std::io::stdout().lock();
            let _ = writeln!(
                out,
                "{}: {} ({} points, {} skipped, {} ms)",
                report.config.scenario,
                report.verdict.as_str(),
                report.points_sampled,
                report.points_skipped,
                report.wall_time_ms
            );
            for c in report.failing_checks() {
                let s = &report.checks[&c];
                let _ = writeln!(
                    out,
                    "  failing: {c} worst {:e} > {:e} ({} errors)",
                    s.worst, s.tolerance, s.errors
                );
            }
            for p in paths {
                let _ = writeln!(out, "  wrote {}", p.display());
            }
            if report.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("obata-lab: {e}");
            ExitCode::from(2)
        }
    }
}
