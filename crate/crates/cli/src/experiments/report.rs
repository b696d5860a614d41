use std::fmt::Write as _;
use std::fs;

use serde_json::Value;

use super::Experiment;
use crate::artifacts::{Artifacts, Outcome};
use crate::config::{ExperimentKind, RunConfig};
use crate::error::CliError;

pub struct Report;

impl Experiment for Report {
    fn kind(&self) -> ExperimentKind {
        ExperimentKind::Report
    }

    fn describe(&self) -> &'static str {
        "status table over the manifests of earlier runs"
    }

    fn run(&self, cfg: &RunConfig, out: &mut Artifacts) -> Result<Outcome, CliError> {
        let mut csv = String::from("input,kind,status,exit_code,message\n");
        let mut rows = Vec::new();
        for dir in &cfg.report.inputs {
            let path = dir.join("manifest.json");
            let text = fs::read_to_string(&path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            let m: Value =
                serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            let field = |k: &str| m.get(k).cloned().unwrap_or(Value::Null);
            let _ = writeln!(
                csv,
                "{},{},{},{},\"{}\"",
                dir.display(),
                field("kind").as_str().unwrap_or("?"),
                field("status").as_str().unwrap_or("?"),
                field("exit_code"),
                field("message").as_str().unwrap_or("").replace('"', "'")
            );
            rows.push(serde_json::json!({
                "input": dir,
                "kind": field("kind"),
                "status": field("status"),
                "metrics": field("metrics"),
            }));
        }
        out.text("report.csv", "plot-csv", &csv)?;
        out.json("report.json", "report", &rows)?;
        let failed = rows.iter().filter(|r| r["status"] != "pass").count();
        Ok(Outcome::new(failed == 0, format!("{} runs, {failed} not passing", rows.len())).metric("failed", failed))
    }
}
