//! Flat key=value parameters: defaults, then a config file, then flags.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use crate::CliError;

#[derive(Debug, Clone, Copy)]
pub struct Key {
    pub name: &'static str,
    pub default: &'static str,
    pub help: &'static str,
}

pub const fn key(name: &'static str, default: &'static str, help: &'static str) -> Key {
    Key { name, default, help }
}

/// Flag spelling of a key: `n_min` is `--n-min`.
pub fn flag(name: &str) -> String {
    name.replace('_', "-")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Source {
    Default,
    File,
    Flag,
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Source::Default => "default",
            Source::File => "file",
            Source::Flag => "flag",
        })
    }
}

#[derive(Debug, Clone)]
pub struct Params {
    pub command: String,
    values: BTreeMap<String, (String, Source)>,
}

/// Parses `key = value` lines; `#` starts a comment.
pub fn parse_config_text(text: &str) -> Result<Vec<(String, String)>, CliError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("config line {}: expected key = value", i + 1)))?;
        out.push((k.trim().replace('-', "_"), v.trim().to_string()));
    }
    Ok(out)
}

impl Params {
    pub fn resolve(
        command: &str,
        keys: &[Key],
        file: Option<&Path>,
        flags: &[(String, String)],
    ) -> Result<Self, CliError> {
        let mut values: BTreeMap<String, (String, Source)> =
            keys.iter().map(|k| (k.name.to_string(), (k.default.to_string(), Source::Default))).collect();
        if let Some(path) = file {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
            for (k, v) in parse_config_text(&text)? {
                let slot = values
                    .get_mut(&k)
                    .ok_or_else(|| CliError::Usage(format!("unknown key '{k}' in {} for `{command}`", path.display())))?;
                *slot = (v, Source::File);
            }
        }
        for (k, v) in flags {
            if let Some(slot) = values.get_mut(k) {
                *slot = (v.clone(), Source::Flag);
            }
        }
        Ok(Self { command: command.to_string(), values })
    }

    pub fn raw(&self, name: &str) -> &str {
        &self.values.get(name).unwrap_or_else(|| panic!("undeclared key {name}")).0
    }

    pub fn is_set(&self, name: &str) -> bool {
        !matches!(self.raw(name), "" | "auto" | "none")
    }

    fn bad(&self, name: &str, what: &str) -> CliError {
        CliError::Usage(format!("--{} = '{}': {what}", flag(name), self.raw(name)))
    }

    pub fn f64(&self, name: &str) -> Result<f64, CliError> {
        let v: f64 = self.raw(name).parse().map_err(|_| self.bad(name, "not a number"))?;
        if !v.is_finite() {
            return Err(self.bad(name, "must be finite"));
        }
        Ok(v)
    }

    pub fn positive(&self, name: &str) -> Result<f64, CliError> {
        let v = self.f64(name)?;
        if v <= 0.0 {
            return Err(self.bad(name, "must be positive"));
        }
        Ok(v)
    }

    pub fn opt_f64(&self, name: &str) -> Result<Option<f64>, CliError> {
        if self.is_set(name) {
            self.f64(name).map(Some)
        } else {
            Ok(None)
        }
    }

    pub fn i64(&self, name: &str) -> Result<i64, CliError> {
        self.raw(name).parse().map_err(|_| self.bad(name, "not an integer"))
    }

    pub fn u64(&self, name: &str) -> Result<u64, CliError> {
        self.raw(name).parse().map_err(|_| self.bad(name, "not a non-negative integer"))
    }

    pub fn count(&self, name: &str) -> Result<usize, CliError> {
        let v: usize = self.raw(name).parse().map_err(|_| self.bad(name, "not a non-negative integer"))?;
        if v == 0 {
            return Err(self.bad(name, "must be at least 1"));
        }
        Ok(v)
    }

    pub fn opt_count(&self, name: &str) -> Result<Option<usize>, CliError> {
        if self.is_set(name) {
            self.count(name).map(Some)
        } else {
            Ok(None)
        }
    }

    pub fn f64_list(&self, name: &str) -> Result<Vec<f64>, CliError> {
        let list: Result<Vec<f64>, _> = self.raw(name).split(',').map(|s| s.trim().parse::<f64>()).collect();
        let list = list.map_err(|_| self.bad(name, "expected a comma-separated list of numbers"))?;
        if list.is_empty() || list.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(self.bad(name, "values must be positive"));
        }
        Ok(list)
    }

    /// Semiclassical parameter within `(0, max]`.
    pub fn h(&self, name: &str, max: f64) -> Result<f64, CliError> {
        let h = self.positive(name)?;
        if h > max {
            return Err(self.bad(name, &format!("must lie in (0, {max}]")));
        }
        Ok(h)
    }

    pub fn interval(&self, lo: &str, hi: &str) -> Result<(f64, f64), CliError> {
        let (a, b) = (self.f64(lo)?, self.f64(hi)?);
        if a >= b {
            return Err(CliError::Usage(format!("--{} must be below --{} ({a} >= {b})", flag(lo), flag(hi))));
        }
        Ok((a, b))
    }

    pub fn int_range(&self, lo: &str, hi: &str) -> Result<(i64, i64), CliError> {
        let (a, b) = (self.i64(lo)?, self.i64(hi)?);
        if a > b {
            return Err(CliError::Usage(format!("--{} must not exceed --{} ({a} > {b})", flag(lo), flag(hi))));
        }
        Ok((a, b))
    }

    pub fn choice<'a>(&'a self, name: &str, allowed: &[&str]) -> Result<&'a str, CliError> {
        let v = self.raw(name);
        if allowed.contains(&v) {
            Ok(v)
        } else {
            Err(self.bad(name, &format!("expected one of {}", allowed.join(", "))))
        }
    }

    pub fn to_map(&self) -> BTreeMap<String, String> {
        self.values.iter().map(|(k, (v, _))| (k.clone(), v.clone())).collect()
    }

    /// The resolved configuration, one `# key = value (source)` line per key.
    pub fn echo(&self) -> String {
        let mut s = format!("# pinch {} {}\n", crate::VERSION, self.command);
        for (k, (v, src)) in &self.values {
            s.push_str(&format!("#   {k} = {v} ({src})\n"));
        }
        s
    }
}
