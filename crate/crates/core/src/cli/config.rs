//! File-backed configuration: a [`RunConfig`] at the top level plus a
//! `paths` section. Validation reports every problem at once.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{Error, Result, Violation};
use crate::synth::SamplingMethod;
use crate::types::RunConfig;

pub const CONFIG_FORMAT_VERSION: u64 = 1;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PathsConfig {
    pub events: Option<PathBuf>,
    pub negatives_out: Option<PathBuf>,
    pub model: Option<PathBuf>,
    pub reports_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CliConfig {
    pub format_version: u64,
    #[serde(flatten)]
    pub run: RunConfig,
    pub paths: PathsConfig,
}

impl Default for CliConfig {
    fn default() -> Self {
        Self {
            format_version: CONFIG_FORMAT_VERSION,
            run: RunConfig::default(),
            paths: PathsConfig::default(),
        }
    }
}

fn violation(key: &str, value: impl ToString, constraint: impl Into<String>) -> Violation {
    Violation {
        key: key.to_string(),
        value: value.to_string(),
        constraint: constraint.into(),
    }
}

fn dotted(prefix: &str, key: &str) -> String {
    if prefix.is_empty() {
        key.to_string()
    } else {
        format!("{prefix}.{key}")
    }
}

/// Every leaf key of the default config, dotted.
fn known_keys(template: &Map<String, Value>, prefix: &str, out: &mut Vec<String>) {
    for (k, v) in template {
        let path = dotted(prefix, k);
        match v {
            Value::Object(inner) => known_keys(inner, &path, out),
            _ => out.push(path),
        }
    }
}

fn leaf(path: &str) -> &str {
    path.rsplit('.').next().unwrap_or(path)
}

fn suggestion(key: &str, known: &[String]) -> Option<String> {
    let name = leaf(key);
    known
        .iter()
        .map(|k| (strsim::jaro_winkler(name, leaf(k)), k))
        .filter(|(score, _)| *score > 0.8)
        .max_by(|a, b| a.0.total_cmp(&b.0))
        .map(|(_, k)| k.clone())
}

fn kind(v: &Value) -> &'static str {
    match v {
        Value::Null => "null",
        Value::Bool(_) => "a boolean",
        Value::Number(_) => "a number",
        Value::String(_) => "a string",
        Value::Array(_) => "an array",
        Value::Object(_) => "an object",
    }
}

/// Compares `given` against the shape of the default `template`.
fn check_shape(
    given: &Map<String, Value>,
    template: &Map<String, Value>,
    prefix: &str,
    known: &[String],
    out: &mut Vec<Violation>,
) {
    for (k, v) in given {
        let path = dotted(prefix, k);
        let Some(t) = template.get(k) else {
            let hint = match suggestion(&path, known) {
                Some(s) => format!("unknown key (did you mean `{s}`?)"),
                None => "unknown key".to_string(),
            };
            out.push(violation(&path, v, hint));
            continue;
        };
        match (t, v) {
            (Value::Object(ti), Value::Object(gi)) => check_shape(gi, ti, &path, known, out),
            (Value::Object(_), _) => out.push(violation(&path, v, "must be an object")),
            // Optional paths.
            (Value::Null, Value::String(_) | Value::Null) => {}
            (Value::Null, _) => out.push(violation(&path, v, "must be a path string or null")),
            (Value::Number(tn), Value::Number(gn)) => {
                if tn.is_u64() && !gn.is_u64() {
                    out.push(violation(&path, v, "must be a non-negative integer"));
                }
            }
            (Value::Array(ta), Value::Array(ga)) => {
                if ga.len() != ta.len() || !ga.iter().all(Value::is_number) {
                    out.push(violation(
                        &path,
                        v,
                        format!("must be an array of {} numbers", ta.len()),
                    ));
                }
            }
            (Value::String(_), Value::String(_)) if path == "synthesis.method" => {
                if serde_json::from_value::<SamplingMethod>(v.clone()).is_err() {
                    out.push(violation(
                        &path,
                        v,
                        "must be \"poisson_disk\" or \"uniform\"",
                    ));
                }
            }
            (t, v) if std::mem::discriminant(t) != std::mem::discriminant(v) => {
                out.push(violation(&path, v, format!("must be {}", kind(t))));
            }
            _ => {}
        }
    }
}

fn check_input(out: &mut Vec<Violation>, key: &str, p: &Option<PathBuf>) {
    if let Some(p) = p {
        if !p.is_file() {
            out.push(violation(key, p.display(), "file does not exist"));
        }
    }
}

fn check_output(out: &mut Vec<Violation>, key: &str, p: &Option<PathBuf>) {
    if let Some(p) = p {
        let parent = p
            .parent()
            .filter(|d| !d.as_os_str().is_empty())
            .unwrap_or(Path::new("."));
        if !parent.is_dir() {
            out.push(violation(
                key,
                p.display(),
                "parent directory does not exist",
            ));
        }
    }
}

impl CliConfig {
    /// Range, version and path violations of an already parsed config.
    pub fn violations(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        if self.format_version != CONFIG_FORMAT_VERSION {
            out.push(violation(
                "format_version",
                self.format_version,
                format!("format_version must be {CONFIG_FORMAT_VERSION}"),
            ));
        }
        out.extend(self.run.violations());
        check_input(&mut out, "paths.events", &self.paths.events);
        check_output(&mut out, "paths.negatives_out", &self.paths.negatives_out);
        check_output(&mut out, "paths.model", &self.paths.model);
        if let Some(d) = &self.paths.reports_dir {
            if !d.is_dir() {
                out.push(violation(
                    "paths.reports_dir",
                    d.display(),
                    "directory does not exist",
                ));
            }
        }
        out
    }
}

/// Parses and validates a config file, collecting all violations.
pub fn validate_config(path: &Path) -> Result<CliConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config(&text)
}

pub fn parse_config(text: &str) -> Result<CliConfig> {
    let value: Value = serde_json::from_str(text).map_err(|e| {
        Error::Config(vec![violation(
            "<file>",
            "",
            format!("not valid JSON: {e}"),
        )])
    })?;
    let Value::Object(given) = value else {
        return Err(Error::Config(vec![violation(
            "<file>",
            "",
            "top level must be a JSON object",
        )]));
    };
    let Value::Object(template) =
        serde_json::to_value(CliConfig::default()).expect("config serializes")
    else {
        unreachable!("config serializes to an object")
    };
    let mut known = Vec::new();
    known_keys(&template, "", &mut known);

    let mut out = Vec::new();
    check_shape(&given, &template, "", &known, &mut out);
    if !out.is_empty() {
        return Err(Error::Config(out));
    }
    let config: CliConfig = serde_json::from_value(Value::Object(given))
        .map_err(|e| Error::Config(vec![violation("<file>", "", e.to_string())]))?;
    let v = config.violations();
    if v.is_empty() {
        Ok(config)
    } else {
        Err(Error::Config(v))
    }
}
