use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use num_complex::Complex64;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::RunConfig;
use crate::CliError;

/// Significant digits printed for doubles: the decimal digits of the run's
/// precision, capped at what a double holds.
pub fn print_digits(bits: u32) -> usize {
    blaschke_sums::boundary::decimal_digits(bits).clamp(1, 17)
}

/// `x` rounded to `digits` significant digits, printed in its shortest form.
pub fn fmt_num(x: f64, digits: usize) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let rounded: f64 = format!("{:.*e}", digits.saturating_sub(1), x)
        .parse()
        .expect("formatted float parses");
    if rounded.abs() < 1e-5 || rounded.abs() >= 1e16 {
        format!("{rounded:e}")
    } else {
        format!("{rounded}")
    }
}

pub fn fmt_complex(z: Complex64, digits: usize) -> String {
    if z.im == 0.0 {
        return fmt_num(z.re, digits);
    }
    let im = fmt_num(z.im.abs(), digits);
    let sign = if z.im < 0.0 { '-' } else { '+' };
    if z.re == 0.0 {
        return format!("{}{im}i", if z.im < 0.0 { "-" } else { "" });
    }
    format!("{}{sign}{im}i", fmt_num(z.re, digits))
}

/// Collects the files of one run and writes them, manifest last.
pub struct Emitter {
    dir: PathBuf,
    files: Vec<String>,
    started: Instant,
}

impl Emitter {
    pub fn new(dir: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|e| {
            CliError::contract(format!(
                "cannot create output directory '{}': {e}",
                dir.display()
            ))
        })?;
        Ok(Emitter {
            dir: dir.to_path_buf(),
            files: Vec::new(),
            started: Instant::now(),
        })
    }

    pub fn bytes(&mut self, name: &str, data: &[u8]) -> Result<(), CliError> {
        let path = self.dir.join(name);
        fs::write(&path, data)
            .map_err(|e| CliError::contract(format!("cannot write '{}': {e}", path.display())))?;
        self.files.push(name.to_string());
        Ok(())
    }

    pub fn json(&mut self, name: &str, value: &impl Serialize) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(value).expect("outputs serialize");
        text.push('\n');
        self.bytes(name, text.as_bytes())
    }

    pub fn jsonl<T: Serialize>(&mut self, name: &str, rows: &[T]) -> Result<(), CliError> {
        let mut text = String::new();
        for row in rows {
            text.push_str(&serde_json::to_string(row).expect("outputs serialize"));
            text.push('\n');
        }
        self.bytes(name, text.as_bytes())
    }

    pub fn csv(
        &mut self,
        name: &str,
        header: &[&str],
        rows: &[Vec<String>],
    ) -> Result<(), CliError> {
        let mut text = header.join(",");
        text.push('\n');
        for row in rows {
            text.push_str(&row.join(","));
            text.push('\n');
        }
        self.bytes(name, text.as_bytes())
    }

    /// Writes manifest.json: the only file carrying timestamps.
    pub fn finish(
        mut self,
        command: &str,
        config: &RunConfig,
        digits: usize,
    ) -> Result<(), CliError> {
        let timestamp = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        let manifest = json!({
            "command": command,
            "config": config,
            "seed": config.seed,
            "decimal_digits": digits,
            "versions": {
                "blaschke_sums": blaschke_sums::VERSION,
                "blaschke_cli": env!("CARGO_PKG_VERSION"),
            },
            "outputs": self.files,
            "wall_time_seconds": self.started.elapsed().as_secs_f64(),
            "timestamp_unix": timestamp,
        });
        self.files = Vec::new();
        self.json("manifest.json", &manifest)
    }
}

/// Wraps a result with the precision it was computed at.
pub fn with_digits(digits: usize, body: Value) -> Value {
    let mut out = json!({ "decimal_digits": digits });
    if let (Value::Object(o), Value::Object(b)) = (&mut out, body) {
        o.extend(b);
    }
    out
}
