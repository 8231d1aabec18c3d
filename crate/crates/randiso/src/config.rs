//! Plain-text `key = value` experiment configuration with `[section]`
//! headers, parsed with line-precise error messages and serialized back in
//! a canonical form so a run's manifest reproduces it byte-identically.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use crate::error::ConfigError;

pub const EXPERIMENTS: &[&str] = &[
    "figure2",
    "crps_periods",
    "lyapunov_sweep",
    "isochrons",
    "mrt_fields",
    "period_compare",
    "double_expectation_probe",
];

/// Parsed configuration: sections of key/value pairs plus typed accessors.
#[derive(Clone, Debug, Default)]
pub struct ExperimentConfig {
    pub sections: BTreeMap<String, BTreeMap<String, String>>,
}

impl ExperimentConfig {
    pub fn parse(text: &str, file: &str) -> Result<Self, ConfigError> {
        let mut sections: BTreeMap<String, BTreeMap<String, String>> = BTreeMap::new();
        let mut current = "global".to_string();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            let lineno = lineno + 1;
            if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
                continue;
            }
            if let Some(head) = line.strip_prefix('[') {
                let name = head.strip_suffix(']').ok_or_else(|| ConfigError::Parse {
                    file: file.into(),
                    line: lineno,
                    msg: "unterminated section header".into(),
                })?;
                if name.trim().is_empty() {
                    return Err(ConfigError::Parse {
                        file: file.into(),
                        line: lineno,
                        msg: "empty section name".into(),
                    });
                }
                current = name.trim().to_string();
                sections.entry(current.clone()).or_default();
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| ConfigError::Parse {
                file: file.into(),
                line: lineno,
                msg: format!("expected key = value, got '{line}'"),
            })?;
            let key = key.trim();
            if key.is_empty() {
                return Err(ConfigError::Parse {
                    file: file.into(),
                    line: lineno,
                    msg: "empty key".into(),
                });
            }
            sections
                .entry(current.clone())
                .or_default()
                .insert(key.to_string(), value.trim().to_string());
        }
        Ok(Self { sections })
    }

    pub fn load(path: &PathBuf) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text, &path.display().to_string())
    }

    /// Canonical serialization: sections and keys sorted, one blank line
    /// between sections.
    pub fn canonical(&self) -> String {
        let mut out = String::new();
        for (name, kv) in &self.sections {
            if kv.is_empty() {
                continue;
            }
            let _ = writeln!(out, "[{name}]");
            for (k, v) in kv {
                let _ = writeln!(out, "{k} = {v}");
            }
            let _ = writeln!(out);
        }
        out
    }

    pub fn get(&self, section: &str, key: &str) -> Option<&str> {
        self.sections
            .get(section)
            .and_then(|kv| kv.get(key))
            .map(|s| s.as_str())
    }

    pub fn set(&mut self, section: &str, key: &str, value: impl ToString) {
        self.sections
            .entry(section.to_string())
            .or_default()
            .insert(key.to_string(), value.to_string());
    }

    pub fn f64_or(&self, section: &str, key: &str, default: f64) -> Result<f64, ConfigError> {
        match self.get(section, key) {
            None => Ok(default),
            Some(v) => v.parse().map_err(|_| ConfigError::Parse {
                file: format!("[{section}]"),
                line: 0,
                msg: format!("{key} must be a number, got '{v}'"),
            }),
        }
    }

    pub fn usize_or(&self, section: &str, key: &str, default: usize) -> Result<usize, ConfigError> {
        match self.get(section, key) {
            None => Ok(default),
            Some(v) => v.parse().map_err(|_| ConfigError::Parse {
                file: format!("[{section}]"),
                line: 0,
                msg: format!("{key} must be an unsigned integer, got '{v}'"),
            }),
        }
    }

    pub fn str_or(&self, section: &str, key: &str, default: &str) -> String {
        self.get(section, key).unwrap_or(default).to_string()
    }

    /// Seeds given as `seed = 7`, `seeds = 1,2,3`, or `seeds = 1..100`
    /// (end exclusive).
    pub fn seeds(&self) -> Result<Vec<u64>, ConfigError> {
        if let Some(v) = self.get("run", "seeds") {
            if let Some((a, b)) = v.split_once("..") {
                let lo: u64 = a.trim().parse().map_err(|_| bad_seed(v))?;
                let hi: u64 = b.trim().parse().map_err(|_| bad_seed(v))?;
                if hi <= lo {
                    return Err(bad_seed(v));
                }
                return Ok((lo..hi).collect());
            }
            return v
                .split(',')
                .map(|s| s.trim().parse().map_err(|_| bad_seed(v)))
                .collect();
        }
        let seed = self.usize_or("run", "seed", 7)? as u64;
        Ok(vec![seed])
    }

    /// Model parameters: every numeric key in `[model]` except `name`.
    pub fn model_params(&self) -> Result<BTreeMap<String, f64>, ConfigError> {
        let mut out = BTreeMap::new();
        if let Some(kv) = self.sections.get("model") {
            for (k, v) in kv {
                if k == "name" {
                    continue;
                }
                let val: f64 = v.parse().map_err(|_| ConfigError::Parse {
                    file: "[model]".into(),
                    line: 0,
                    msg: format!("{k} must be a number, got '{v}'"),
                })?;
                out.insert(k.clone(), val);
            }
        }
        Ok(out)
    }

    pub fn experiment(&self) -> Result<String, ConfigError> {
        let name = self
            .get("experiment", "name")
            .ok_or_else(|| ConfigError::MissingKey("[experiment] name".into()))?;
        if !EXPERIMENTS.contains(&name) {
            return Err(ConfigError::UnknownExperiment(name.into()));
        }
        Ok(name.to_string())
    }
}

fn bad_seed(v: &str) -> ConfigError {
    ConfigError::Parse {
        file: "[run]".into(),
        line: 0,
        msg: format!("seeds must be N, N,M,... or A..B, got '{v}'"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_sections_and_values() {
        let text = "# comment\n[experiment]\nname = figure2\n\n[model]\nname = hopf_linear\nsigma = 0.5\n\n[run]\nseeds = 1..4\ndt = 1e-2\n";
        let cfg = ExperimentConfig::parse(text, "test.cfg").unwrap();
        assert_eq!(cfg.experiment().unwrap(), "figure2");
        assert_eq!(cfg.get("model", "name"), Some("hopf_linear"));
        assert_eq!(cfg.f64_or("model", "sigma", 0.0).unwrap(), 0.5);
        assert_eq!(cfg.seeds().unwrap(), vec![1, 2, 3]);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let text = "[experiment]\nname = figure2\nbroken line\n";
        let err = ExperimentConfig::parse(text, "bad.cfg").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("bad.cfg:3"), "{msg}");
    }

    #[test]
    fn unknown_experiment_is_rejected() {
        let text = "[experiment]\nname = nonsense\n";
        let cfg = ExperimentConfig::parse(text, "x.cfg").unwrap();
        assert!(matches!(
            cfg.experiment(),
            Err(ConfigError::UnknownExperiment(_))
        ));
    }

    #[test]
    fn canonical_roundtrip_is_stable() {
        let text = "[run]\nseed = 9\n[model]\nsigma = 0.3\nname = hopf_linear\n";
        let cfg = ExperimentConfig::parse(text, "a.cfg").unwrap();
        let canon = cfg.canonical();
        let cfg2 = ExperimentConfig::parse(&canon, "b.cfg").unwrap();
        assert_eq!(canon, cfg2.canonical());
    }
}
