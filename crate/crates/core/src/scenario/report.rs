//! Run reports as JSON (lossless) and markdown (for people).

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::check::Check;
use crate::scenario::config::ScenarioConfig;
use crate::verify::{CheckSummary, Failure, ScenarioVerdict};

pub const TOOLKIT: &str = "obata-lab";
/// Failure rows shown in markdown; JSON carries all of them.
pub const MARKDOWN_FAILURE_ROWS: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Verdict {
    Pass,
    Fail,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
        }
    }
}

/// Everything a run produced. `wall_time_ms` is the only field that varies
/// between runs with the same config, and it is serialized last.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Report {
    pub toolkit: String,
    pub version: String,
    /// The config as run, with scenario defaults filled in.
    pub config: ScenarioConfig,
    pub space: String,
    pub points_sampled: usize,
    pub points_skipped: usize,
    pub isotropic: bool,
    pub checks: BTreeMap<Check, CheckSummary>,
    pub failures: Vec<Failure>,
    pub verdict: Verdict,
    pub wall_time_ms: u64,
}

impl Report {
    pub fn new(config: ScenarioConfig, verdict: ScenarioVerdict, wall_time_ms: u64) -> Self {
        Self {
            toolkit: TOOLKIT.to_string(),
            version: crate::VERSION.to_string(),
            config,
            space: verdict.space,
            points_sampled: verdict.points_sampled,
            points_skipped: verdict.points_skipped,
            isotropic: verdict.isotropic,
            checks: verdict.checks,
            failures: verdict.failures,
            verdict: if verdict.pass {
                Verdict::Pass
            } else {
                Verdict::Fail
            },
            wall_time_ms,
        }
    }

    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }

    /// Checks that did not pass, in check order.
    pub fn failing_checks(&self) -> Vec<Check> {
        self.checks
            .iter()
            .filter(|(_, s)| !s.pass)
            .map(|(c, _)| *c)
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Markdown,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Json => "json",
            Format::Markdown => "md",
        }
    }
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "json" => Ok(Format::Json),
            "md" | "markdown" => Ok(Format::Markdown),
            other => Err(format!("unknown format `{other}`")),
        }
    }
}

pub fn emit_report(report: &Report, format: Format) -> Vec<u8> {
    match format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(report).expect("report serializes");
            s.push('\n');
            s.into_bytes()
        }
        Format::Markdown => markdown(report).into_bytes(),
    }
}

pub fn parse_report(json: &[u8]) -> serde_json::Result<Report> {
    serde_json::from_slice(json)
}

/// `<scenario>-<seed>.<ext>`
pub fn report_file_name(report: &Report, format: Format) -> String {
    format!(
        "{}-{}.{}",
        report.config.scenario,
        report.config.seed,
        format.extension()
    )
}

/// Writes one file per format into `dir`, creating it if needed.
pub fn write_reports(report: &Report, dir: &Path, formats: &[Format]) -> io::Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    formats
        .iter()
        .map(|&f| {
            let path = dir.join(report_file_name(report, f));
            std::fs::write(&path, emit_report(report, f))?;
            Ok(path)
        })
        .collect()
}

fn sci(x: f64) -> String {
    format!("{x:.3e}")
}

fn markdown(r: &Report) -> String {
    let mut out = String::new();
    let c = &r.config;
    let _ = writeln!(out, "# {} report: {}\n", r.toolkit, c.scenario);
    let _ = writeln!(out, "| field | value |");
    let _ = writeln!(out, "|---|---|");
    let _ = writeln!(out, "| toolkit | {} {} |", r.toolkit, r.version);
    let _ = writeln!(out, "| space | `{}` |", r.space);
    let _ = writeln!(out, "| seed | {} |", c.seed);
    let _ = writeln!(
        out,
        "| samples | {} sampled, {} skipped as critical |",
        r.points_sampled, r.points_skipped
    );
    let _ = writeln!(
        out,
        "| differences | step {:e}, {} Richardson levels |",
        c.fd_step, c.richardson
    );
    let _ = writeln!(
        out,
        "| isotropic | {} |",
        if r.isotropic { "yes" } else { "no" }
    );
    let _ = writeln!(out, "| verdict | **{}** |", r.verdict.as_str());
    let _ = writeln!(out, "| wall time | {} ms |", r.wall_time_ms);

    let _ = writeln!(out, "\n## Checks\n");
    let _ = writeln!(
        out,
        "| check | worst | tolerance | worst at | evaluated | errors | status |"
    );
    let _ = writeln!(out, "|---|---|---|---|---|---|---|");
    for (check, s) in &r.checks {
        let at = s
            .worst_point_index
            .map(|i| i.to_string())
            .unwrap_or_else(|| "-".into());
        let status = if s.pass { "ok" } else { "FAIL" };
        let _ = writeln!(
            out,
            "| {check} | {} | {} | {at} | {} | {} | {status} |",
            sci(s.worst),
            sci(s.tolerance),
            s.evaluated,
            s.errors
        );
    }

    if !r.failures.is_empty() {
        let shown = r.failures.len().min(MARKDOWN_FAILURE_ROWS);
        let _ = writeln!(out, "\n## Failures ({shown} of {})\n", r.failures.len());
        let _ = writeln!(out, "| point | check | value | message |");
        let _ = writeln!(out, "|---|---|---|---|");
        for f in &r.failures[..shown] {
            let value = f.value.map(sci).unwrap_or_else(|| "-".into());
            let message = f.message.replace('|', "\\|");
            let _ = writeln!(
                out,
                "| {} | {} | {value} | {message} |",
                f.point_index, f.check
            );
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(pass: bool) -> Report {
        let mut checks = BTreeMap::new();
        checks.insert(
            Check::DOmega,
            CheckSummary {
                worst: 1.0 / 3.0 * 1e-7,
                tolerance: 1e-5,
                pass,
                worst_point_index: Some(3),
                evaluated: 10,
                errors: 0,
            },
        );
        let failures = if pass {
            vec![]
        } else {
            vec![Failure {
                check: Check::DOmega,
                point_index: 3,
                point: vec![0.1, std::f64::consts::PI],
                value: Some(0.5),
                message: "d_omega = 5e-1 exceeds 1e-5".into(),
            }]
        };
        Report::new(
            ScenarioConfig::new("flat_cn"),
            ScenarioVerdict {
                space: "flat_cn".into(),
                points_sampled: 10,
                points_skipped: 0,
                isotropic: true,
                checks,
                failures,
                pass,
            },
            12,
        )
    }

    #[test]
    fn json_round_trips_exactly() {
        for pass in [true, false] {
            let r = sample(pass);
            let bytes = emit_report(&r, Format::Json);
            assert_eq!(parse_report(&bytes).unwrap(), r);
            let text = String::from_utf8(bytes).unwrap();
            let last_key = text.rfind("\"wall_time_ms\"").unwrap();
            assert!(text[last_key..].lines().count() <= 2);
        }
    }

    #[test]
    fn markdown_says_pass_once() {
        let md = String::from_utf8(emit_report(&sample(true), Format::Markdown)).unwrap();
        assert_eq!(md.matches("PASS").count(), 1);
        let row = md.lines().find(|l| l.contains("PASS")).unwrap();
        assert!(row.starts_with("| verdict |"));
        let md = String::from_utf8(emit_report(&sample(false), Format::Markdown)).unwrap();
        assert_eq!(md.matches("PASS").count(), 0);
        assert!(md.contains("| verdict | **FAIL** |"));
    }

    #[test]
    fn file_names() {
        let r = sample(true);
        assert_eq!(report_file_name(&r, Format::Json), "flat_cn-42.json");
        assert_eq!(report_file_name(&r, Format::Markdown), "flat_cn-42.md");
    }
}
