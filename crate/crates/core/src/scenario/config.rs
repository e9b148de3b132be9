//! Scenario files: TOML with a fixed key set, validated into [`ScenarioConfig`].
//!
//! ```toml
//! version = 1
//! scenario = "dwp_sinh"
//! samples = 100
//! seed = 42
//!
//! [parameters]
//! n = 2
//!
//! [tolerances]
//! d_omega = 1e-5
//! ```

use std::collections::BTreeMap;
use std::fmt;
use std::ops::Range;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use toml::Spanned;

use crate::check::Check;
use crate::diff::{MAX_RICHARDSON_LEVELS, MAX_STEP, MIN_STEP};
use crate::profile::{H1_NAMES, H2_NAMES, SIGMA_NAMES, WARP_NAMES};
use crate::scenario::registry;

pub const CONFIG_VERSION: u32 = 1;
pub const DEFAULT_SAMPLES: usize = 100;
pub const MAX_SAMPLES: usize = 100_000;
pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_FD_STEP: f64 = 1e-4;
pub const DEFAULT_RICHARDSON: u32 = 2;

/// Where a config problem was found.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Location {
    Line(usize),
    /// Not tied to a line, e.g. a missing key.
    Document,
    /// A `--override key=value` argument.
    Override(String),
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Location::Line(n) => write!(f, "line {n}"),
            Location::Document => f.write_str("config"),
            Location::Override(arg) => write!(f, "override `{arg}`"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("{at}: syntax error: {message}")]
    SyntaxError { message: String, at: Location },
    #[error("{at}: unknown key `{key}`")]
    UnknownKey { key: String, at: Location },
    #[error("{at}: unknown scenario or profile `{name}`")]
    UnknownScenario { name: String, at: Location },
    #[error("{at}: `{key}` out of range: {message}")]
    BadRange {
        key: String,
        message: String,
        at: Location,
    },
}

impl ConfigError {
    pub fn location(&self) -> &Location {
        match self {
            ConfigError::SyntaxError { at, .. }
            | ConfigError::UnknownKey { at, .. }
            | ConfigError::UnknownScenario { at, .. }
            | ConfigError::BadRange { at, .. } => at,
        }
    }

    fn relocated(mut self, to: Location) -> Self {
        match &mut self {
            ConfigError::SyntaxError { at, .. }
            | ConfigError::UnknownKey { at, .. }
            | ConfigError::UnknownScenario { at, .. }
            | ConfigError::BadRange { at, .. } => *at = to,
        }
        self
    }
}

/// Model parameters. Absent entries take the scenario's defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Parameters {
    /// Complex dimension.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    /// Line-bundle degree.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<i32>,
    /// Curvature constant; `chern_sign · k` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub w_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h1: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h2: Option<String>,
    /// Scales `h₁ − h₁(0)`; anything but 1 breaks the structure ODE.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h1_perturb: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chern_sign: Option<f64>,
    /// Drop analytic profile derivatives and difference them instead.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fd_profiles: Option<bool>,
}

pub const PARAMETER_KEYS: [&str; 15] = [
    "n",
    "k",
    "l",
    "r_min",
    "r_max",
    "w_max",
    "t_min",
    "t_max",
    "rho",
    "sigma",
    "h1",
    "h2",
    "h1_perturb",
    "chern_sign",
    "fd_profiles",
];

impl Parameters {
    /// Names of the entries that are set.
    pub fn present(&self) -> Vec<&'static str> {
        let set = [
            self.n.is_some(),
            self.k.is_some(),
            self.l.is_some(),
            self.r_min.is_some(),
            self.r_max.is_some(),
            self.w_max.is_some(),
            self.t_min.is_some(),
            self.t_max.is_some(),
            self.rho.is_some(),
            self.sigma.is_some(),
            self.h1.is_some(),
            self.h2.is_some(),
            self.h1_perturb.is_some(),
            self.chern_sign.is_some(),
            self.fd_profiles.is_some(),
        ];
        PARAMETER_KEYS
            .iter()
            .zip(set)
            .filter(|(_, s)| *s)
            .map(|(k, _)| *k)
            .collect()
    }

    pub fn is_empty(&self) -> bool {
        self.present().is_empty()
    }

    /// `self` with every entry set in `top` replaced.
    pub fn overlaid(&self, top: &Parameters) -> Parameters {
        Parameters {
            n: top.n.or(self.n),
            k: top.k.or(self.k),
            l: top.l.or(self.l),
            r_min: top.r_min.or(self.r_min),
            r_max: top.r_max.or(self.r_max),
            w_max: top.w_max.or(self.w_max),
            t_min: top.t_min.or(self.t_min),
            t_max: top.t_max.or(self.t_max),
            rho: top.rho.clone().or_else(|| self.rho.clone()),
            sigma: top.sigma.clone().or_else(|| self.sigma.clone()),
            h1: top.h1.clone().or_else(|| self.h1.clone()),
            h2: top.h2.clone().or_else(|| self.h2.clone()),
            h1_perturb: top.h1_perturb.or(self.h1_perturb),
            chern_sign: top.chern_sign.or(self.chern_sign),
            fd_profiles: top.fd_profiles.or(self.fd_profiles),
        }
    }
}

/// A validated scenario run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub version: u32,
    pub scenario: String,
    pub samples: usize,
    /// Written as a decimal string so the full `u64` range survives TOML.
    #[serde(serialize_with = "seed_to_string", deserialize_with = "seed_from_any")]
    pub seed: u64,
    pub fd_step: f64,
    pub richardson: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checks: Option<Vec<Check>>,
    #[serde(default)]
    pub parameters: Parameters,
    #[serde(default)]
    pub tolerances: BTreeMap<Check, f64>,
}

fn seed_to_string<S: Serializer>(seed: &u64, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&seed.to_string())
}

fn seed_from_any<'de, D: Deserializer<'de>>(d: D) -> Result<u64, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Seed {
        Int(u64),
        Text(String),
    }
    match Seed::deserialize(d)? {
        Seed::Int(v) => Ok(v),
        Seed::Text(s) => parse_seed(&s).map_err(serde::de::Error::custom),
    }
}

/// Decimal or `0x` hex.
pub fn parse_seed(s: &str) -> Result<u64, String> {
    let s = s.trim().replace('_', "");
    let parsed = match s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")) {
        Some(hex) => u64::from_str_radix(hex, 16),
        None => s.parse::<u64>(),
    };
    parsed.map_err(|_| format!("`{s}` is not an unsigned 64-bit integer"))
}

impl ScenarioConfig {
    /// Defaults for everything but the scenario name.
    pub fn new(scenario: impl Into<String>) -> Self {
        Self {
            version: CONFIG_VERSION,
            scenario: scenario.into(),
            samples: DEFAULT_SAMPLES,
            seed: DEFAULT_SEED,
            fd_step: DEFAULT_FD_STEP,
            richardson: DEFAULT_RICHARDSON,
            checks: None,
            parameters: Parameters::default(),
            tolerances: BTreeMap::new(),
        }
    }

    /// Parameters with the scenario's defaults filled in.
    pub fn resolved_parameters(&self) -> Parameters {
        match registry::lookup(&self.scenario) {
            Some(entry) => entry.defaults().overlaid(&self.parameters),
            None => self.parameters.clone(),
        }
    }

    /// Same run with every parameter spelled out.
    pub fn resolved(&self) -> ScenarioConfig {
        ScenarioConfig {
            parameters: self.resolved_parameters(),
            ..self.clone()
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes to TOML")
    }

    /// Applies `key=value` overrides in order. Keys are dotted paths such as
    /// `samples`, `parameters.n` or `tolerances.d_omega`; values are TOML
    /// literals, and anything that does not parse as one is taken as a string.
    pub fn with_overrides<S: AsRef<str>>(
        &self,
        overrides: &[S],
    ) -> Result<ScenarioConfig, ConfigError> {
        let mut current = self.clone();
        for arg in overrides {
            let arg = arg.as_ref();
            let at = Location::Override(arg.to_string());
            let (key, value) = arg
                .split_once('=')
                .ok_or_else(|| ConfigError::SyntaxError {
                    message: "expected key=value".into(),
                    at: at.clone(),
                })?;
            let path: Vec<&str> = key.trim().split('.').map(str::trim).collect();
            if path.iter().any(|p| p.is_empty()) {
                return Err(ConfigError::SyntaxError {
                    message: format!("empty segment in key `{key}`"),
                    at,
                });
            }
            let value = parse_literal(value);
            let mut table =
                toml::Table::try_from(&current).expect("config serializes to a TOML table");
            set_path(&mut table, &path, value).map_err(|message| ConfigError::SyntaxError {
                message,
                at: at.clone(),
            })?;
            let text = toml::to_string(&table).expect("table serializes");
            current = parse_config(&text).map_err(|e| e.relocated(at))?;
        }
        Ok(current)
    }
}

fn parse_literal(value: &str) -> toml::Value {
    let value = value.trim();
    match toml::from_str::<toml::Table>(&format!("v = {value}")) {
        Ok(mut t) => t.remove("v").expect("key v present"),
        Err(_) => toml::Value::String(value.to_string()),
    }
}

fn set_path(table: &mut toml::Table, path: &[&str], value: toml::Value) -> Result<(), String> {
    let (last, parents) = path.split_last().expect("non-empty path");
    let mut t = table;
    for p in parents {
        let entry = t
            .entry(p.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        t = entry
            .as_table_mut()
            .ok_or_else(|| format!("`{p}` is not a table"))?;
    }
    t.insert(last.to_string(), value);
    Ok(())
}

type SpannedTable = BTreeMap<String, Spanned<toml::Value>>;

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    version: Option<Spanned<toml::Value>>,
    scenario: Option<Spanned<toml::Value>>,
    samples: Option<Spanned<toml::Value>>,
    seed: Option<Spanned<toml::Value>>,
    fd_step: Option<Spanned<toml::Value>>,
    richardson: Option<Spanned<toml::Value>>,
    checks: Option<Spanned<toml::Value>>,
    parameters: Option<Spanned<SpannedTable>>,
    tolerances: Option<Spanned<SpannedTable>>,
}

struct Cx<'a> {
    text: &'a str,
}

impl Cx<'_> {
    fn line(&self, span: Range<usize>) -> Location {
        let end = span.start.min(self.text.len());
        Location::Line(self.text[..end].matches('\n').count() + 1)
    }

    fn bad(&self, key: &str, span: Range<usize>, message: impl Into<String>) -> ConfigError {
        ConfigError::BadRange {
            key: key.to_string(),
            message: message.into(),
            at: self.line(span),
        }
    }

    fn type_error(&self, key: &str, v: &Spanned<toml::Value>, expected: &str) -> ConfigError {
        ConfigError::SyntaxError {
            message: format!(
                "`{key}` must be {expected}, found {}",
                v.get_ref().type_str()
            ),
            at: self.line(v.span()),
        }
    }

    fn integer(
        &self,
        key: &str,
        v: &Spanned<toml::Value>,
        lo: i64,
        hi: i64,
    ) -> Result<i64, ConfigError> {
        let x = v
            .get_ref()
            .as_integer()
            .ok_or_else(|| self.type_error(key, v, "an integer"))?;
        if x < lo || x > hi {
            return Err(self.bad(key, v.span(), format!("{x} not in [{lo}, {hi}]")));
        }
        Ok(x)
    }

    /// Integers are accepted where reals are expected.
    fn real(&self, key: &str, v: &Spanned<toml::Value>) -> Result<f64, ConfigError> {
        let x = match v.get_ref() {
            toml::Value::Float(f) => *f,
            toml::Value::Integer(i) => *i as f64,
            _ => return Err(self.type_error(key, v, "a number")),
        };
        if !x.is_finite() {
            return Err(self.bad(key, v.span(), format!("{x} is not finite")));
        }
        Ok(x)
    }

    fn positive(&self, key: &str, v: &Spanned<toml::Value>) -> Result<f64, ConfigError> {
        let x = self.real(key, v)?;
        if x <= 0.0 {
            return Err(self.bad(key, v.span(), format!("{x} must be positive")));
        }
        Ok(x)
    }

    fn string<'v>(&self, key: &str, v: &'v Spanned<toml::Value>) -> Result<&'v str, ConfigError> {
        v.get_ref()
            .as_str()
            .ok_or_else(|| self.type_error(key, v, "a string"))
    }

    fn profile_name(
        &self,
        key: &str,
        v: &Spanned<toml::Value>,
        known: &[&str],
    ) -> Result<String, ConfigError> {
        let s = self.string(key, v)?;
        if !known.contains(&s) {
            return Err(ConfigError::UnknownScenario {
                name: format!("{key} = {s}"),
                at: self.line(v.span()),
            });
        }
        Ok(s.to_string())
    }
}

/// Parses and validates a scenario file.
pub fn parse_config(text: &str) -> Result<ScenarioConfig, ConfigError> {
    let cx = Cx { text };
    let raw: RawConfig = toml::from_str(text).map_err(|e| {
        let at = e.span().map(|s| cx.line(s)).unwrap_or(Location::Document);
        let message = e.message().to_string();
        match message
            .strip_prefix("unknown field `")
            .and_then(|rest| rest.split('`').next())
        {
            Some(key) => ConfigError::UnknownKey {
                key: key.to_string(),
                at,
            },
            None => ConfigError::SyntaxError { message, at },
        }
    })?;

    let version = match &raw.version {
        Some(v) => {
            let x = v
                .get_ref()
                .as_integer()
                .ok_or_else(|| cx.type_error("version", v, "an integer"))?;
            if x != CONFIG_VERSION as i64 {
                return Err(cx.bad(
                    "version",
                    v.span(),
                    format!("only version {CONFIG_VERSION} is supported, got {x}"),
                ));
            }
            CONFIG_VERSION
        }
        None => CONFIG_VERSION,
    };

    let scenario_v = raw
        .scenario
        .as_ref()
        .ok_or_else(|| ConfigError::SyntaxError {
            message: "missing required key `scenario`".into(),
            at: Location::Document,
        })?;
    let scenario = cx.string("scenario", scenario_v)?.to_string();
    let entry = registry::lookup(&scenario).ok_or_else(|| ConfigError::UnknownScenario {
        name: scenario.clone(),
        at: cx.line(scenario_v.span()),
    })?;

    let samples = match &raw.samples {
        Some(v) => cx.integer("samples", v, 1, MAX_SAMPLES as i64)? as usize,
        None => DEFAULT_SAMPLES,
    };

    let seed = match &raw.seed {
        Some(v) => match v.get_ref() {
            toml::Value::Integer(i) if *i >= 0 => *i as u64,
            toml::Value::Integer(i) => {
                return Err(cx.bad("seed", v.span(), format!("{i} is negative")))
            }
            toml::Value::String(s) => parse_seed(s).map_err(|m| cx.bad("seed", v.span(), m))?,
            _ => return Err(cx.type_error("seed", v, "an integer or a string")),
        },
        None => DEFAULT_SEED,
    };

    let fd_step = match &raw.fd_step {
        Some(v) => {
            let h = cx.real("fd_step", v)?;
            if !(MIN_STEP..=MAX_STEP).contains(&h) {
                return Err(cx.bad(
                    "fd_step",
                    v.span(),
                    format!("{h} not in [{MIN_STEP}, {MAX_STEP}]"),
                ));
            }
            h
        }
        None => DEFAULT_FD_STEP,
    };

    let richardson = match &raw.richardson {
        Some(v) => cx.integer("richardson", v, 1, MAX_RICHARDSON_LEVELS as i64)? as u32,
        None => DEFAULT_RICHARDSON,
    };

    let checks = match &raw.checks {
        Some(v) => {
            let items = v
                .get_ref()
                .as_array()
                .ok_or_else(|| cx.type_error("checks", v, "an array of check names"))?;
            if items.is_empty() {
                return Err(cx.bad("checks", v.span(), "at least one check is required"));
            }
            let mut out: Vec<Check> = Vec::with_capacity(items.len());
            for item in items {
                let name = item
                    .as_str()
                    .ok_or_else(|| cx.type_error("checks", v, "an array of check names"))?;
                let c: Check = name.parse().map_err(|_| ConfigError::UnknownKey {
                    key: format!("checks.{name}"),
                    at: cx.line(v.span()),
                })?;
                if out.contains(&c) {
                    return Err(cx.bad("checks", v.span(), format!("`{name}` listed twice")));
                }
                out.push(c);
            }
            Some(out)
        }
        None => None,
    };

    let mut tolerances = BTreeMap::new();
    if let Some(t) = &raw.tolerances {
        for (name, v) in t.get_ref() {
            let c: Check = name.parse().map_err(|_| ConfigError::UnknownKey {
                key: format!("tolerances.{name}"),
                at: cx.line(v.span()),
            })?;
            tolerances.insert(c, cx.positive(&format!("tolerances.{name}"), v)?);
        }
    }

    let mut parameters = Parameters::default();
    let empty = SpannedTable::new();
    let raw_params = raw
        .parameters
        .as_ref()
        .map(|p| p.get_ref())
        .unwrap_or(&empty);
    for (key, v) in raw_params {
        let qualified = format!("parameters.{key}");
        if !PARAMETER_KEYS.contains(&key.as_str()) || !entry.accepts(key) {
            return Err(ConfigError::UnknownKey {
                key: qualified,
                at: cx.line(v.span()),
            });
        }
        match key.as_str() {
            "n" => {
                let (lo, hi) = entry.n_range();
                parameters.n = Some(cx.integer(&qualified, v, lo as i64, hi as i64)? as usize);
            }
            "k" => parameters.k = Some(cx.integer(&qualified, v, -16, 16)? as i32),
            "l" => parameters.l = Some(cx.real(&qualified, v)?),
            "r_min" => parameters.r_min = Some(cx.positive(&qualified, v)?),
            "r_max" => parameters.r_max = Some(cx.positive(&qualified, v)?),
            "w_max" => parameters.w_max = Some(cx.positive(&qualified, v)?),
            "t_min" => parameters.t_min = Some(cx.positive(&qualified, v)?),
            "t_max" => parameters.t_max = Some(cx.positive(&qualified, v)?),
            "rho" => parameters.rho = Some(cx.profile_name(&qualified, v, &WARP_NAMES)?),
            "sigma" => parameters.sigma = Some(cx.profile_name(&qualified, v, &SIGMA_NAMES)?),
            "h1" => parameters.h1 = Some(cx.profile_name(&qualified, v, &H1_NAMES)?),
            "h2" => parameters.h2 = Some(cx.profile_name(&qualified, v, &H2_NAMES)?),
            "h1_perturb" => parameters.h1_perturb = Some(cx.positive(&qualified, v)?),
            "chern_sign" => {
                let s = cx.real(&qualified, v)?;
                if s != 1.0 && s != -1.0 {
                    return Err(cx.bad(&qualified, v.span(), format!("{s} must be 1 or -1")));
                }
                parameters.chern_sign = Some(s);
            }
            "fd_profiles" => {
                parameters.fd_profiles = Some(
                    v.get_ref()
                        .as_bool()
                        .ok_or_else(|| cx.type_error(&qualified, v, "a boolean"))?,
                );
            }
            _ => unreachable!("key list checked above"),
        }
    }

    let resolved = entry.defaults().overlaid(&parameters);
    for (lo_key, hi_key, lo, hi) in [
        ("r_min", "r_max", resolved.r_min, resolved.r_max),
        ("t_min", "t_max", resolved.t_min, resolved.t_max),
    ] {
        if let (Some(lo), Some(hi)) = (lo, hi) {
            if lo >= hi {
                let culprit = raw_params
                    .get(hi_key)
                    .or_else(|| raw_params.get(lo_key))
                    .map(|v| cx.line(v.span()))
                    .unwrap_or(Location::Document);
                return Err(ConfigError::BadRange {
                    key: format!("parameters.{lo_key}"),
                    message: format!("{lo_key} = {lo} must be below {hi_key} = {hi}"),
                    at: culprit,
                });
            }
        }
    }

    Ok(ScenarioConfig {
        version,
        scenario,
        samples,
        seed,
        fd_step,
        richardson,
        checks,
        parameters,
        tolerances,
    })
}
