//! Scenario files.
//!
//! ```text
//! # comments start with '#'
//! replicates = 1000          # defaults: before the first section
//! seed = 20240601
//!
//! [defaults]                 # optional, same effect
//! n = 500
//!
//! [linear a=0 median]        # one section per scenario; the name is free text
//! a = 0
//! tau_quantile = 0.5
//! ```
//!
//! Keys: `n`, `pi`, `a`, `link` (`linear`/`quadratic`), `treatment_effect`,
//! `censor_rate`, `tau_quantile`, `tau_link`, `covariate_noise_var`,
//! `replicates`, `seed`, `level`. Scenario keys override defaults.

use std::path::Path;

use rmst_core::simkit::ScenarioConfig;

use crate::error::{CliError, Result};

pub const KEYS: [&str; 12] = [
    "n",
    "pi",
    "a",
    "link",
    "treatment_effect",
    "censor_rate",
    "tau_quantile",
    "tau_link",
    "covariate_noise_var",
    "replicates",
    "seed",
    "level",
];

struct Entry {
    key: String,
    value: String,
    line: usize,
}

pub fn load(path: impl AsRef<Path>) -> Result<Vec<ScenarioConfig>> {
    let text = std::fs::read_to_string(path.as_ref()).map_err(|e| CliError::io(path.as_ref(), e))?;
    parse(&text, &path.as_ref().display().to_string())
}

/// Parses a scenario file; `source` names it in error messages.
pub fn parse(text: &str, source: &str) -> Result<Vec<ScenarioConfig>> {
    let err = |line: usize, key: Option<&str>, message: String| CliError::Config {
        path: source.to_string(),
        line,
        key: key.map(str::to_string),
        message,
    };

    let mut defaults: Vec<Entry> = Vec::new();
    let mut sections: Vec<(String, usize, Vec<Entry>)> = Vec::new();
    let mut in_defaults = true;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(rest) = content.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| err(line, None, format!("unterminated section header {content:?}")))?
                .trim();
            if name.is_empty() {
                return Err(err(line, None, "empty section name".into()));
            }
            if name == "defaults" {
                if !sections.is_empty() {
                    return Err(err(line, None, "[defaults] must come before any scenario".into()));
                }
                in_defaults = true;
                continue;
            }
            if sections.iter().any(|s| s.0 == name) {
                return Err(err(line, None, format!("duplicate scenario {name:?}")));
            }
            in_defaults = false;
            sections.push((name.to_string(), line, Vec::new()));
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| err(line, None, format!("expected key = value, got {content:?}")))?;
        let (key, value) = (key.trim(), value.trim());
        if !KEYS.contains(&key) {
            return Err(err(line, Some(key), format!("unknown key {key:?}")));
        }
        let target = if in_defaults {
            &mut defaults
        } else {
            &mut sections.last_mut().expect("section exists").2
        };
        if target.iter().any(|e| e.key == key) {
            return Err(err(line, Some(key), format!("key {key:?} given twice")));
        }
        target.push(Entry {
            key: key.to_string(),
            value: value.to_string(),
            line,
        });
    }
    if sections.is_empty() {
        return Err(err(text.lines().count().max(1), None, "no [scenario] sections".into()));
    }

    let mut out = Vec::with_capacity(sections.len());
    for (name, line, entries) in sections {
        let mut cfg = ScenarioConfig {
            name,
            ..Default::default()
        };
        for e in defaults.iter().chain(&entries) {
            apply(&mut cfg, &e.key, &e.value).map_err(|m| err(e.line, Some(&e.key), m))?;
        }
        cfg.validate().map_err(|e| err(line, None, e.to_string()))?;
        out.push(cfg);
    }
    Ok(out)
}

fn apply(cfg: &mut ScenarioConfig, key: &str, value: &str) -> std::result::Result<(), String> {
    fn num<T: std::str::FromStr>(key: &str, value: &str) -> std::result::Result<T, String> {
        value
            .parse()
            .map_err(|_| format!("{key}: cannot parse {value:?}"))
    }
    match key {
        "n" => cfg.n = num(key, value)?,
        "pi" => cfg.pi = num(key, value)?,
        "a" => cfg.a = num(key, value)?,
        "link" => cfg.link = value.parse().map_err(|e| format!("{key}: {e}"))?,
        "treatment_effect" => cfg.treatment_effect = num(key, value)?,
        "censor_rate" => cfg.censor_rate = num(key, value)?,
        "tau_quantile" => cfg.tau_quantile = num(key, value)?,
        "tau_link" => cfg.tau_link = Some(value.parse().map_err(|e| format!("{key}: {e}"))?),
        "covariate_noise_var" => cfg.covariate_noise_var = num(key, value)?,
        "replicates" => cfg.replicates = num(key, value)?,
        "seed" => cfg.seed = num(key, value)?,
        "level" => cfg.level = num(key, value)?,
        _ => unreachable!("key checked against KEYS"),
    }
    Ok(())
}
