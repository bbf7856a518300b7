use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::CliError;

/// Every key accepted in a configuration file, with its default.
const KEYS: &[(&str, &str)] = &[
    ("grid.half_length", "30"),
    ("grid.points", "1201"),
    ("physics.gamma", "0"),
    ("physics.alpha", "0.5"),
    ("physics.sign", "+1"),
    ("field.h", "0"),
    ("field.schedule", ""),
    ("field.file", ""),
    ("integrator.scheme", "rk4"),
    ("integrator.dt", ""),
    ("integrator.t_end", "50"),
    ("integrator.record_every", "60"),
    ("integrator.snapshot_every", "300"),
    ("integrator.allow_large_dt", "false"),
    ("integrator.write_snapshots", "false"),
    ("perturbation.seed", "1"),
    ("perturbation.amplitude", "0"),
    ("initial.state", "wall"),
    ("initial.gauge_y", "0"),
    ("initial.gauge_phi", "0"),
    ("spectrum.k", "4"),
    ("spectrum.eigenvectors", "0"),
    ("relax.max_steps", "400000"),
    ("relax.tol", "1e-7"),
    ("sweep.gamma", ""),
    ("sweep.alpha", ""),
    ("sweep.h", ""),
    ("sweep.amplitude", ""),
    ("output.dir", "out"),
];

/// Flat `section.key = value` configuration with defaults filled in.
#[derive(Clone, Debug, PartialEq)]
pub struct Config {
    values: BTreeMap<String, String>,
    base_dir: PathBuf,
}

impl Config {
    pub fn defaults() -> Self {
        Config {
            values: KEYS.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect(),
            base_dir: PathBuf::from("."),
        }
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut cfg = Config::parse(&text)?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(cfg)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut cfg = Config::defaults();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("line {}: expected `key = value`", n + 1)))?;
            cfg.set(k.trim(), v.trim())
                .map_err(|e| CliError::Config(format!("line {}: {e}", n + 1)))?;
        }
        Ok(cfg)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        match self.values.get_mut(key) {
            Some(slot) => {
                *slot = value.to_string();
                Ok(())
            }
            None => Err(CliError::Config(format!("unknown key `{key}`"))),
        }
    }

    /// Applies a `key=value` override.
    pub fn apply_override(&mut self, entry: &str) -> Result<(), CliError> {
        let (k, v) = entry
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("override `{entry}` is not key=value")))?;
        self.set(k.trim(), v.trim())
    }

    pub fn raw(&self, key: &str) -> &str {
        self.values.get(key).map(String::as_str).expect("key is registered")
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<T, CliError> {
        let v = self.raw(key);
        v.parse()
            .map_err(|_| CliError::Config(format!("`{key}` has invalid value `{v}`")))
    }

    pub fn optional<T: FromStr>(&self, key: &str) -> Result<Option<T>, CliError> {
        if self.raw(key).is_empty() {
            Ok(None)
        } else {
            self.get(key).map(Some)
        }
    }

    /// Comma-separated list, or `None` when empty.
    pub fn list(&self, key: &str) -> Result<Option<Vec<f64>>, CliError> {
        let v = self.raw(key);
        if v.is_empty() {
            return Ok(None);
        }
        v.split(',')
            .map(|s| {
                s.trim()
                    .parse()
                    .map_err(|_| CliError::Config(format!("`{key}` has invalid entry `{}`", s.trim())))
            })
            .collect::<Result<Vec<f64>, _>>()
            .map(Some)
    }

    pub fn resolve(&self, p: &str) -> PathBuf {
        let p = Path::new(p);
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    /// Canonical `key = value` text, sorted by key.
    pub fn canonical(&self) -> String {
        let mut s = String::new();
        for (k, v) in &self.values {
            let _ = writeln!(s, "{k} = {v}");
        }
        s
    }
}
