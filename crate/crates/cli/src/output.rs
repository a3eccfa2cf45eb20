use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::{json, Value};

/// How a command failed; decides the exit status.
#[derive(Debug)]
pub enum CliError {
    /// Rejected before any compute (exit 2).
    Validation(anyhow::Error),
    /// Anything else (exit 1).
    Other(anyhow::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Other(_) => 1,
        }
    }

    pub fn to_json(&self) -> Value {
        let (class, e) = match self {
            CliError::Validation(e) => ("validation", e),
            CliError::Other(e) => ("error", e),
        };
        let kind = e.downcast_ref::<wsi_core::Error>().map_or("config", |c| c.kind());
        json!({ "error": class, "kind": kind, "message": format!("{e:#}") })
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Validation(e) | CliError::Other(e) => write!(f, "{e:#}"),
        }
    }
}

pub fn invalid(e: impl Into<anyhow::Error>) -> CliError {
    CliError::Validation(e.into())
}

pub fn other(e: impl Into<anyhow::Error>) -> CliError {
    CliError::Other(e.into())
}

/// What a finished scenario leaves behind besides its files.
#[derive(Debug, Default)]
pub struct Outcome {
    pub outputs: Vec<String>,
    pub summary: Value,
    /// Terminal event that stopped the computation early (exit 3).
    pub terminal: Option<wsi_core::Error>,
    /// Non-zero when the scenario ran but reports failed checks.
    pub exit_code: i32,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        if self.terminal.is_some() {
            3
        } else {
            self.exit_code
        }
    }
}

pub fn terminal_json(e: &wsi_core::Error) -> Value {
    let mut v = json!({ "error": "terminal", "kind": e.kind(), "message": e.to_string() });
    if let wsi_core::Error::Shock { time, position } = e {
        v["time"] = json!(time);
        v["position"] = json!(position);
    }
    v
}

/// Collects the files written into one output directory.
pub struct OutDir {
    pub path: PathBuf,
    pub files: Vec<String>,
}

impl OutDir {
    pub fn create(path: &Path) -> Result<Self> {
        fs::create_dir_all(path).with_context(|| format!("creating {}", path.display()))?;
        Ok(Self { path: path.to_path_buf(), files: Vec::new() })
    }

    pub fn csv<I, R>(&mut self, name: &str, header: &[&str], rows: I) -> Result<()>
    where
        I: IntoIterator<Item = R>,
        R: AsRef<[f64]>,
    {
        let path = self.path.join(name);
        let mut w = csv::Writer::from_path(&path).with_context(|| format!("writing {}", path.display()))?;
        w.write_record(header)?;
        for row in rows {
            w.serialize(row.as_ref())?;
        }
        w.flush()?;
        self.files.push(name.to_string());
        Ok(())
    }

    pub fn json(&mut self, name: &str, value: &impl Serialize) -> Result<()> {
        let path = self.path.join(name);
        fs::write(&path, serde_json::to_string_pretty(value)? + "\n").with_context(|| format!("writing {}", path.display()))?;
        self.files.push(name.to_string());
        Ok(())
    }

    pub fn text(&mut self, name: &str, body: &str) -> Result<()> {
        let path = self.path.join(name);
        fs::write(&path, body).with_context(|| format!("writing {}", path.display()))?;
        self.files.push(name.to_string());
        Ok(())
    }
}

pub struct ManifestInput<'a> {
    pub scenario: &'a str,
    pub config_text: &'a str,
    pub config: &'a Value,
    pub overrides: Option<&'a Value>,
}

pub fn write_manifest(dir: &Path, input: &ManifestInput<'_>, outcome: &Outcome) -> Result<()> {
    let mut m = json!({
        "scenario": input.scenario,
        "version": env!("CARGO_PKG_VERSION"),
        "config_text": input.config_text,
        "config": input.config,
        "outputs": outcome.outputs,
        "summary": outcome.summary,
        "terminal": outcome.terminal.as_ref().map(terminal_json),
    });
    if let Some(o) = input.overrides {
        m["overrides"] = o.clone();
    }
    let path = dir.join("manifest.json");
    fs::write(&path, serde_json::to_string_pretty(&m)? + "\n").with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

/// gnuplot script plotting column `y` against column 1 for each CSV.
pub fn gnuplot_script(title: &str, files: &[String], ylabel: &str, y: usize) -> String {
    let mut s = format!(
        "set datafile separator ','\nset key autotitle columnhead\nset title '{title}'\nset xlabel 't'\nset ylabel '{ylabel}'\nplot "
    );
    let parts: Vec<String> = files.iter().map(|f| format!("'{f}' using 1:{y} with lines title '{f}'")).collect();
    s.push_str(&parts.join(", \\\n     "));
    s.push('\n');
    s
}
