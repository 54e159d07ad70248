use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::{json, Value};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, Serialize)]
pub struct Assertion {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

/// Collects files and assertions for one subcommand run.
pub struct Run {
    pub command: String,
    pub out: PathBuf,
    pub seed: u64,
    pub assertions: Vec<Assertion>,
    pub files: Vec<String>,
}

impl Run {
    pub fn new(command: &str, out: &Path, seed: u64) -> Result<Self> {
        std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
        Ok(Run {
            command: command.into(),
            out: out.to_path_buf(),
            seed,
            assertions: Vec::new(),
            files: Vec::new(),
        })
    }

    pub fn check(&mut self, name: impl Into<String>, pass: bool, detail: impl Into<String>) {
        self.assertions.push(Assertion {
            name: name.into(),
            pass,
            detail: detail.into(),
        });
    }

    /// Buffered writer for `<out>/<name>`.
    pub fn file(&mut self, name: &str) -> Result<BufWriter<File>> {
        let path = self.out.join(name);
        let f = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
        self.files.push(name.into());
        Ok(BufWriter::new(f))
    }

    /// Writes `<command>.json` and returns the assertions.
    pub fn write(mut self, config: &impl Serialize, result: Value) -> Result<Vec<Assertion>> {
        let timestamp = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        let name = format!("{}.json", self.command);
        self.files.push(name.clone());
        let report = json!({
            "schema_version": SCHEMA_VERSION,
            "command": self.command,
            "timestamp": timestamp,
            "seed": self.seed,
            "config": config,
            "assertions": self.assertions,
            "files": self.files,
            "result": result,
        });
        let path = self.out.join(&name);
        std::fs::write(&path, serde_json::to_string_pretty(&report)? + "\n")
            .with_context(|| format!("writing {}", path.display()))?;
        Ok(self.assertions)
    }

    /// Writes the report, prints one line per assertion and returns whether
    /// every assertion passed.
    pub fn finish(self, config: &impl Serialize, result: Value) -> Result<bool> {
        let command = self.command.clone();
        let assertions = self.write(config, result)?;
        for a in &assertions {
            println!(
                "{} {}: {}",
                if a.pass { "PASS" } else { "FAIL" },
                a.name,
                a.detail
            );
        }
        if assertions.is_empty() {
            println!("DONE {command}: no assertions configured");
        }
        Ok(assertions.iter().all(|a| a.pass))
    }
}
