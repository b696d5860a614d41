//! Batch driver: `fpme <kind> --config <path> [--out <dir>] [--override k=v]...`.

pub mod artifacts;
pub mod config;
pub mod error;
pub mod experiments;

use std::fs;
use std::path::PathBuf;

use fpme_core::asymptotics::scaling_exponents;
use serde_json::{json, Value};

use crate::artifacts::{manifest, Artifacts};
use crate::config::{parse_config, ExperimentKind, RunConfig};
use crate::error::CliError;

/// What a finished invocation reports back to the shell.
#[derive(Debug)]
pub struct RunSummary {
    pub exit_code: i32,
    /// Lines for stdout.
    pub lines: Vec<String>,
    pub out_dir: Option<PathBuf>,
}

fn derived(cfg: &RunConfig) -> Value {
    let p = cfg.params();
    let exps = p.is_slow().then(|| scaling_exponents(&p).ok()).flatten();
    json!({
        "h": cfg.grid().map(|g| g.spacing()).ok(),
        "exponents": exps,
        "two_s": 2.0 * p.s,
        "slow": p.is_slow(),
        "fast": p.is_fast(),
        "elliptic_uniqueness_grade": p.is_elliptic_uniqueness_grade(),
        "c_lower": p.c_lower,
        "c_upper": p.c_upper,
    })
}

/// Parses and validates the configuration, runs the experiment and writes the
/// manifest. Config errors leave the output directory untouched.
pub fn execute(
    kind: ExperimentKind,
    text: &str,
    out: Option<PathBuf>,
    overrides: &[String],
    threads: usize,
) -> RunSummary {
    let fail = |e: CliError| RunSummary {
        exit_code: e.exit_code(),
        lines: vec![e.to_string()],
        out_dir: None,
    };
    let mut cfg = match parse_config(text, overrides) {
        Ok(c) => c,
        Err(e) => return fail(e),
    };
    if cfg.kind != kind {
        return fail(CliError::Config(format!(
            "config declares kind `{}` but the command is `{}`",
            cfg.kind.name(),
            kind.name()
        )));
    }
    if let Some(dir) = out {
        cfg.out = dir;
    }
    let mut lines = vec![format!("{}: {}", kind.name(), experiments::lookup(kind).describe())];
    if kind != ExperimentKind::Report && cfg.params().is_slow() {
        if let Ok(e) = scaling_exponents(&cfg.params()) {
            lines.push(format!("exponents: κ={}, α={}, β={}", e.kappa, e.alpha, e.beta));
        }
    }
    let mut art = match Artifacts::create(&cfg.out) {
        Ok(a) => a,
        Err(e) => return fail(e),
    };
    let result = experiments::lookup(kind).run(&cfg, &mut art);
    let body = manifest(&cfg, derived(&cfg), &result, &art, threads);
    let written = fs::write(art.dir().join("config.toml"), cfg.to_toml()).and_then(|_| {
        fs::write(
            art.dir().join("manifest.json"),
            serde_json::to_string_pretty(&body).expect("manifest serializes") + "\n",
        )
    });
    if let Err(e) = written {
        return fail(e.into());
    }
    let exit_code = match &result {
        Ok(o) => {
            lines.push(format!("{}: {}", if o.pass { "PASS" } else { "FAIL" }, o.message));
            o.exit_code()
        }
        Err(e) => {
            lines.push(e.to_string());
            e.exit_code()
        }
    };
    lines.push(format!("artifacts in {}", art.dir().display()));
    RunSummary {
        exit_code,
        lines,
        out_dir: Some(cfg.out),
    }
}
