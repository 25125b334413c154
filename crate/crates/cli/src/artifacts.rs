//! Run-directory layout: manifests, CSV tables, JSON summaries.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::json;

use crate::config::RunConfig;

/// A created output directory that artifact writers append into.
pub struct RunDir {
    root: PathBuf,
}

impl RunDir {
    pub fn create(path: &Path) -> Result<RunDir> {
        fs::create_dir_all(path)
            .with_context(|| format!("creating output directory {}", path.display()))?;
        Ok(RunDir {
            root: path.to_path_buf(),
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn write_text(&self, name: &str, contents: &str) -> Result<PathBuf> {
        let path = self.path(name);
        fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }

    pub fn write_json<T: Serialize>(&self, name: &str, value: &T) -> Result<PathBuf> {
        let mut text = serde_json::to_string_pretty(value).context("serializing JSON")?;
        text.push('\n');
        self.write_text(name, &text)
    }
}

/// Everything needed to reproduce the run: the effective config (which
/// carries every seed) plus the subcommand and tool version.
pub fn manifest(command: &str, cfg: &RunConfig) -> serde_json::Value {
    json!({
        "tool": env!("CARGO_PKG_NAME"),
        "version": env!("CARGO_PKG_VERSION"),
        "command": command,
        "config": cfg,
    })
}

/// Reads the `config` field back out of a run's manifest.
pub fn config_from_manifest(run_dir: &Path) -> Result<RunConfig> {
    let path = run_dir.join("manifest.json");
    let text = fs::read_to_string(&path)
        .with_context(|| format!("reading manifest {}", path.display()))?;
    let value: serde_json::Value =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    let config = value
        .get("config")
        .with_context(|| format!("{} has no config field", path.display()))?;
    serde_json::from_value(config.clone()).context("decoding config from manifest")
}

/// Formats one CSV table from a header and stringified rows.
pub fn csv_table(header: &str, rows: &[Vec<String>]) -> String {
    let mut out = String::from(header);
    out.push('\n');
    for row in rows {
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}
