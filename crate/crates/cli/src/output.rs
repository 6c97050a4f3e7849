//! Result files: CSV with `#` metadata lines plus a JSON mirror.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde_json::{json, Value};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

pub struct Report {
    pub command: &'static str,
    pub seed: Option<u64>,
    /// Resolved run config, excluding flags that cannot change results.
    pub config: Value,
    /// CSV table with its header row.
    pub table: String,
    pub results: Value,
    pub summary: String,
}

impl Report {
    pub fn csv(&self) -> String {
        let mut out = format!("# tool: meta-ot {TOOL_VERSION}\n# command: {}\n", self.command);
        if let Some(seed) = self.seed {
            out.push_str(&format!("# seed: {seed}\n"));
        }
        out.push_str(&format!("# config: {}\n", self.config));
        out.push_str(&self.table);
        out
    }

    pub fn json(&self) -> Value {
        json!({
            "tool": "meta-ot",
            "version": TOOL_VERSION,
            "command": self.command,
            "seed": self.seed,
            "config": self.config,
            "results": self.results,
        })
    }

    /// Writes `<out>.csv` and `<out>.json` (any extension on `out` is
    /// replaced) and prints the summary line.
    pub fn emit(&self, out: Option<&Path>) -> Result<()> {
        if let Some(out) = out {
            let (csv, json) = output_paths(out);
            if let Some(dir) = csv.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            }
            fs::write(&csv, self.csv()).with_context(|| format!("writing {}", csv.display()))?;
            let mut text = serde_json::to_string_pretty(&self.json())?;
            text.push('\n');
            fs::write(&json, text).with_context(|| format!("writing {}", json.display()))?;
        }
        println!("{}", self.summary);
        Ok(())
    }
}

pub fn output_paths(out: &Path) -> (PathBuf, PathBuf) {
    (out.with_extension("csv"), out.with_extension("json"))
}
