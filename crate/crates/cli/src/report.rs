use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use leafwise::pipeline::REPORT_SCHEMA;
use leafwise::Verdict;
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

/// Report printed on stdout and written to `<out>/report.json`. It holds no
/// wall-clock data, so identical inputs give byte-identical reports.
#[derive(Serialize)]
pub struct Envelope {
    pub schema: u32,
    pub command: String,
    pub config_hash: String,
    pub seed: Option<u64>,
    pub config: Value,
    pub verdict: Verdict,
    pub result: Value,
}

/// SHA-256 over the canonical JSON of the command config and the resolved input.
pub fn config_hash(config: &Value, input: Option<&str>) -> String {
    let mut h = Sha256::new();
    h.update(serde_json::to_vec(config).expect("config serializes"));
    if let Some(s) = input {
        h.update([0u8]);
        h.update(s.as_bytes());
    }
    format!("{:x}", h.finalize())
}

impl Envelope {
    pub fn new(command: &str, seed: Option<u64>, config: Value, input: Option<&str>, verdict: Verdict, result: Value) -> Self {
        let config_hash = config_hash(&config, input);
        Self { schema: REPORT_SCHEMA, command: command.into(), config_hash, seed, config, verdict, result }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Output directory for reports and artifacts.
pub struct OutDir(Option<PathBuf>);

impl OutDir {
    pub fn new(dir: Option<PathBuf>) -> Result<Self> {
        if let Some(d) = &dir {
            std::fs::create_dir_all(d).with_context(|| format!("creating {}", d.display()))?;
        }
        Ok(Self(dir))
    }

    pub fn path(&self) -> Option<&Path> {
        self.0.as_deref()
    }

    pub fn write(&self, name: &str, contents: &str) -> Result<()> {
        if let Some(d) = &self.0 {
            let p = d.join(name);
            std::fs::write(&p, contents).with_context(|| format!("writing {}", p.display()))?;
        }
        Ok(())
    }

    /// Writes the report and its timestamp sidecar.
    pub fn write_report(&self, env: &Envelope, threads: usize, elapsed: f64) -> Result<()> {
        if self.0.is_none() {
            return Ok(());
        }
        self.write("report.json", &(env.to_json() + "\n"))?;
        let now = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        let meta = json!({
            "config_hash": env.config_hash,
            "finished_unix": now,
            "elapsed_s": elapsed,
            "threads": threads,
            "version": env!("CARGO_PKG_VERSION"),
        });
        self.write("report.meta.json", &(serde_json::to_string_pretty(&meta)? + "\n"))
    }
}

/// CSV text with a header row; non-finite values become empty cells.
pub fn csv(header: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> String {
    let mut s = header.join(",");
    s.push('\n');
    for row in rows {
        let cells: Vec<String> = row.iter().map(|v| if v.is_finite() { format!("{v:e}") } else { String::new() }).collect();
        s.push_str(&cells.join(","));
        s.push('\n');
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_depends_on_config_and_input() {
        let a = config_hash(&json!({"seed": 1}), None);
        assert_eq!(a.len(), 64);
        assert_eq!(a, config_hash(&json!({"seed": 1}), None));
        assert_ne!(a, config_hash(&json!({"seed": 2}), None));
        assert_ne!(a, config_hash(&json!({"seed": 1}), Some("x")));
    }

    #[test]
    fn csv_blanks_nan() {
        assert_eq!(csv(&["a", "b"], [vec![1.0, f64::NAN]]), "a,b\n1e0,\n");
    }
}
