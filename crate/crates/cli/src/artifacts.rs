//! Output directory bookkeeping and the run manifest.

use std::fs;
use std::path::{Path, PathBuf};

use fpme_core::grid::Field;
use fpme_core::io::{field_to_csv, write_field_binary};
use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::config::RunConfig;
use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArtifactEntry {
    pub file: String,
    pub role: &'static str,
}

#[derive(Debug)]
pub struct Artifacts {
    dir: PathBuf,
    entries: Vec<ArtifactEntry>,
}

impl Artifacts {
    pub fn create(dir: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(dir)?;
        Ok(Self {
            dir: dir.to_path_buf(),
            entries: Vec::new(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn entries(&self) -> &[ArtifactEntry] {
        &self.entries
    }

    pub fn text(&mut self, file: &str, role: &'static str, contents: &str) -> Result<(), CliError> {
        fs::write(self.dir.join(file), contents)?;
        self.entries.push(ArtifactEntry {
            file: file.into(),
            role,
        });
        Ok(())
    }

    pub fn json(&mut self, file: &str, role: &'static str, value: &impl Serialize) -> Result<(), CliError> {
        let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Io(e.to_string()))?;
        self.text(file, role, &(text + "\n"))
    }

    /// `<stem>.csv` and `<stem>.bin`.
    pub fn field(&mut self, stem: &str, field: &Field, s: f64) -> Result<(), CliError> {
        self.text(&format!("{stem}.csv"), "field-csv", &field_to_csv(field))?;
        let mut buf = Vec::new();
        write_field_binary(field, s, &mut buf)?;
        fs::write(self.dir.join(format!("{stem}.bin")), buf)?;
        self.entries.push(ArtifactEntry {
            file: format!("{stem}.bin"),
            role: "field-binary",
        });
        Ok(())
    }
}

/// Result of an experiment that ran to completion.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub pass: bool,
    pub message: String,
    pub metrics: Map<String, Value>,
}

impl Outcome {
    pub fn new(pass: bool, message: impl Into<String>) -> Self {
        Self {
            pass,
            message: message.into(),
            metrics: Map::new(),
        }
    }

    pub fn metric(mut self, key: &str, value: impl Serialize) -> Self {
        self.metrics
            .insert(key.into(), serde_json::to_value(value).unwrap_or(Value::Null));
        self
    }

    pub fn exit_code(&self) -> i32 {
        if self.pass {
            0
        } else {
            4
        }
    }
}

/// Manifest body; `config` is the fully resolved configuration, defaults included.
pub fn manifest(
    cfg: &RunConfig,
    derived: Value,
    result: &Result<Outcome, CliError>,
    artifacts: &Artifacts,
    threads: usize,
) -> Value {
    let (status, code, message, metrics) = match result {
        Ok(o) => (
            if o.pass { "pass" } else { "threshold-failure" },
            o.exit_code(),
            o.message.clone(),
            Value::Object(o.metrics.clone()),
        ),
        Err(e) => (e.status(), e.exit_code(), e.to_string(), Value::Null),
    };
    json!({
        "tool": "fpme",
        "version": env!("CARGO_PKG_VERSION"),
        "kind": cfg.kind,
        "status": status,
        "exit_code": code,
        "message": message,
        "metrics": metrics,
        "config": cfg,
        "derived": derived,
        "constants": {
            "cfl_safety": fpme_core::pme::CFL_SAFETY,
            "monotone_slack": fpme_core::asymptotics::MONOTONE_SLACK,
            "bound_slack": fpme_core::asymptotics::BOUND_SLACK,
            "inner_fraction": fpme_core::asymptotics::INNER_FRACTION,
            "min_dyadic_times": fpme_core::asymptotics::MIN_DYADIC_TIMES,
        },
        "threads": threads,
        "artifacts": artifacts.entries(),
    })
}
