//! Output files with their provenance.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use crate::params::Params;
use crate::CliError;

pub fn provenance(p: &Params) -> Value {
    json!({ "version": crate::VERSION, "command": p.command, "config": p.to_map() })
}

fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    }
    std::fs::write(path, bytes).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

/// Writes tabular text to `out` (`-` is stdout); files get a JSON sidecar
/// `<out>.json` holding the resolved configuration and `extra`.
pub fn emit_table(out: &str, text: &str, p: &Params, extra: Option<Value>) -> Result<(), CliError> {
    if out == "-" {
        std::io::stdout().write_all(text.as_bytes()).map_err(|e| CliError::Io(e.to_string()))?;
        return Ok(());
    }
    let path = Path::new(out);
    write_file(path, text.as_bytes())?;
    let mut meta = provenance(p);
    if let Some(extra) = extra {
        meta["data"] = extra;
    }
    write_file(&sidecar_path(path), pretty(&meta).as_bytes())
}

/// Writes a JSON document with the provenance embedded under `"provenance"`.
pub fn emit_json(out: &str, mut doc: Value, p: &Params) -> Result<(), CliError> {
    doc["provenance"] = provenance(p);
    let text = pretty(&doc);
    if out == "-" {
        std::io::stdout().write_all(text.as_bytes()).map_err(|e| CliError::Io(e.to_string()))?;
        Ok(())
    } else {
        write_file(Path::new(out), text.as_bytes())
    }
}

/// Two-column whitespace-separated plot data.
pub fn emit_plot(dir: &Path, name: &str, rows: &[(f64, f64)], header: &str) -> Result<PathBuf, CliError> {
    let mut s = format!("# {header}\n");
    for (a, b) in rows {
        s.push_str(&format!("{} {}\n", sig15(*a), sig15(*b)));
    }
    let path = dir.join(name);
    write_file(&path, s.as_bytes())?;
    Ok(path)
}

pub fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON values serialize");
    s.push('\n');
    s
}

/// Decimal with 15 significant digits; scientific outside [1e-5, 1e15).
pub fn sig15(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return format!("{v}");
    }
    let mag = v.abs().log10().floor() as i32;
    if (-5..15).contains(&mag) {
        format!("{:.*}", (14 - mag) as usize, v)
    } else {
        format!("{v:.14e}")
    }
}

#[cfg(test)]
mod tests {
    use super::sig15;

    #[test]
    fn fifteen_significant_digits() {
        assert_eq!(sig15(1.0), "1.00000000000000");
        assert_eq!(sig15(-291.2039672483751), "-291.203967248375");
        assert_eq!(sig15(0.001234), "0.00123400000000000");
        assert_eq!(sig15(0.0), "0");
        assert_eq!(sig15(3e-9), "3.00000000000000e-9");
    }
}
