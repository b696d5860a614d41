//! Run configuration: TOML text merged over per-experiment defaults.

use std::path::PathBuf;

use fpme_core::asymptotics::{FAST_THRESHOLD, SLOW_THRESHOLD};
use fpme_core::density::{DensityKind, ModelParams};
use fpme_core::grid::Grid;
use serde::{Deserialize, Serialize};
use toml::{Table, Value};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    ValidateOperators,
    RunParabolic,
    SolveElliptic,
    Barenblatt,
    VerdictSlow,
    VerdictFast,
    Report,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 7] = [
        Self::ValidateOperators,
        Self::RunParabolic,
        Self::SolveElliptic,
        Self::Barenblatt,
        Self::VerdictSlow,
        Self::VerdictFast,
        Self::Report,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::ValidateOperators => "validate-operators",
            Self::RunParabolic => "run-parabolic",
            Self::SolveElliptic => "solve-elliptic",
            Self::Barenblatt => "barenblatt",
            Self::VerdictSlow => "verdict-slow",
            Self::VerdictFast => "verdict-fast",
            Self::Report => "report",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == name)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub kind: ExperimentKind,
    /// Logged for replay; the built-in test banks are deterministic.
    pub seed: u64,
    pub out: PathBuf,
    pub grid: GridSection,
    pub model: ModelSection,
    pub operator: OperatorSection,
    pub datum: DatumSection,
    pub schedule: ScheduleSection,
    pub elliptic: EllipticSection,
    pub barenblatt: BarenblattSection,
    pub thresholds: ThresholdSection,
    pub report: ReportSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    /// Nodes per axis.
    pub n: usize,
    /// The box is `[-L, L]^d`.
    pub half_extent: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub density: DensityKind,
    pub m: f64,
    pub s: f64,
    pub d: usize,
    pub gamma: f64,
    pub c_inf: f64,
    pub mass: f64,
    pub eps_reg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorSection {
    /// Account for flux through the exterior of the box.
    pub tail: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DatumShape {
    Bump,
    Bimodal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatumSection {
    pub shape: DatumShape,
    /// Bump center on the first axis.
    pub center: f64,
    /// Bimodal half-separation.
    pub separation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleSection {
    pub t_end: f64,
    /// First snapshot of the logarithmic cadence.
    pub t_min: f64,
    pub per_decade: usize,
    pub dyadic_base: f64,
    pub dyadic_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EllipticSection {
    pub alpha: f64,
    pub kernel: String,
    pub tol: f64,
    pub max_iterations: usize,
    /// Binary `w` field written by `solve-elliptic`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BarenblattSection {
    pub t_ref: f64,
    /// Regularization of the pure-power weight as a fraction of `h`.
    pub eps_over_h: f64,
    pub max_leak: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThresholdSection {
    pub slow: f64,
    pub fast: f64,
    pub inverse_residual: f64,
    pub cross_validation: f64,
    pub self_similarity: f64,
    pub mass_balance: f64,
    /// Branch agreement as a multiple of `elliptic.tol`.
    pub branch_agreement: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportSection {
    /// Output directories of earlier runs.
    pub inputs: Vec<PathBuf>,
}

impl RunConfig {
    /// Reference setup of each experiment.
    pub fn defaults(kind: ExperimentKind) -> Self {
        use ExperimentKind::*;
        let fast = matches!(kind, SolveElliptic | VerdictFast);
        let (n, half_extent) = match kind {
            ValidateOperators | RunParabolic => (1024, 40.0),
            Barenblatt | VerdictSlow => (2048, 64.0),
            SolveElliptic | VerdictFast | Report => (2048, 80.0),
        };
        let (density, s, gamma) = if fast {
            (DensityKind::Fast, 0.2, 0.9)
        } else {
            (DensityKind::Slow, 0.25, 0.25)
        };
        Self {
            kind,
            seed: 0,
            out: PathBuf::from("fpme-out"),
            grid: GridSection { n, half_extent },
            model: ModelSection {
                density,
                m: 2.0,
                s,
                d: 1,
                gamma,
                c_inf: 1.0,
                mass: 1.0,
                eps_reg: 1.0,
            },
            operator: OperatorSection { tail: true },
            datum: DatumSection {
                shape: if kind == VerdictSlow {
                    DatumShape::Bimodal
                } else {
                    DatumShape::Bump
                },
                center: 0.0,
                separation: 1.0,
            },
            schedule: ScheduleSection {
                t_end: if fast { 1e4 } else { 64.0 },
                t_min: 0.1,
                per_decade: 4,
                dyadic_base: 1.0,
                dyadic_count: 7,
            },
            elliptic: EllipticSection {
                alpha: 0.5,
                kernel: if kind == VerdictFast { "exterior-zero" } else { "riesz" }.into(),
                tol: if kind == VerdictFast { 1e-10 } else { 1e-8 },
                max_iterations: fpme_core::elliptic::DEFAULT_MAX_ITERATIONS,
                input: None,
            },
            barenblatt: BarenblattSection {
                t_ref: 8.0,
                eps_over_h: 0.01,
                max_leak: 0.5,
            },
            thresholds: ThresholdSection {
                slow: SLOW_THRESHOLD,
                fast: FAST_THRESHOLD,
                inverse_residual: 0.02,
                cross_validation: 0.02,
                self_similarity: 0.02,
                mass_balance: 1e-10,
                branch_agreement: 10.0,
            },
            report: ReportSection { inputs: Vec::new() },
        }
    }

    pub fn params(&self) -> ModelParams {
        let m = &self.model;
        ModelParams::new(m.m, m.s, m.d, m.gamma, m.c_inf, m.mass, m.eps_reg)
    }

    pub fn grid(&self) -> Result<Grid, CliError> {
        Grid::new(self.model.d, self.grid.n, self.grid.half_extent).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

/// Parses `text`, applies `overrides` (`section.key=value`), fills defaults for
/// the configured kind and validates the result.
pub fn parse_config(text: &str, overrides: &[String]) -> Result<RunConfig, CliError> {
    let mut user: Table = toml::from_str(text).map_err(|e| CliError::Config(format!("config parse error: {e}")))?;
    for ov in overrides {
        apply_override(&mut user, ov)?;
    }
    let kind = match user.get("kind") {
        None => return Err(CliError::Config("missing key `kind` (one of: validate-operators, run-parabolic, solve-elliptic, barenblatt, verdict-slow, verdict-fast, report)".into())),
        Some(Value::String(k)) => ExperimentKind::parse(k).ok_or_else(|| CliError::Config(format!("unknown experiment kind `{k}`")))?,
        Some(other) => return Err(CliError::Config(format!("`kind` must be a string, got {other}"))),
    };
    let mut merged = Table::try_from(RunConfig::defaults(kind)).expect("defaults serialize");
    merge(&mut merged, user);
    let cfg: RunConfig = Value::Table(merged)
        .try_into()
        .map_err(|e: toml::de::Error| CliError::Config(e.message().to_string()))?;
    validate(&cfg)?;
    Ok(cfg)
}

fn merge(base: &mut Table, over: Table) {
    for (k, v) in over {
        match (base.get_mut(&k), v) {
            (Some(Value::Table(b)), Value::Table(o)) => merge(b, o),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

fn apply_override(table: &mut Table, spec: &str) -> Result<(), CliError> {
    let (path, raw) = spec
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("override `{spec}` is not of the form key=value")))?;
    let value = toml::from_str::<Table>(&format!("v = {}", raw.trim()))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| Value::String(raw.trim().to_string()));
    let keys: Vec<&str> = path.trim().split('.').collect();
    let (last, parents) = keys.split_last().expect("split yields one item");
    let mut node = table;
    for key in parents {
        let entry = node
            .entry(key.to_string())
            .or_insert_with(|| Value::Table(Table::new()));
        node = match entry {
            Value::Table(t) => t,
            _ => return Err(CliError::Config(format!("override `{spec}`: `{key}` is not a section"))),
        };
    }
    node.insert(last.to_string(), value);
    Ok(())
}

/// Consistency checks that need no compute.
pub fn validate(cfg: &RunConfig) -> Result<(), CliError> {
    use ExperimentKind::*;
    let p = cfg.params();
    let (g, s) = (p.gamma, p.s);
    let wants_slow = matches!(cfg.kind, Barenblatt | VerdictSlow);
    let wants_fast = matches!(cfg.kind, SolveElliptic | VerdictFast);
    if wants_slow && cfg.model.density == DensityKind::Fast || wants_fast && cfg.model.density != DensityKind::Fast {
        return Err(CliError::Config(format!(
            "{} needs a {} weight, got model.density = \"{}\"",
            cfg.kind.name(),
            if wants_slow { "slow" } else { "fast" },
            cfg.model.density.name()
        )));
    }
    match cfg.model.density {
        DensityKind::Slow | DensityKind::PurePower => {
            if !(g < 2.0 * s) {
                return Err(CliError::Config(format!(
                    "slow regime requires γ < 2s: got γ={g}, s={s}"
                )));
            }
            if !(g <= p.d as f64 - 2.0 * s) {
                return Err(CliError::Config(format!(
                    "slow regime requires γ ≤ d - 2s: got γ={g}, s={s}, d={}",
                    p.d
                )));
            }
        }
        DensityKind::Fast => {
            if !(g > 2.0 * s) {
                return Err(CliError::Config(format!(
                    "fast regime requires γ > 2s: got γ={g}, s={s}; γ must exceed 2s = {}",
                    2.0 * s
                )));
            }
        }
    }
    p.validate().map_err(|e| CliError::Config(e.to_string()))?;
    cfg.grid()?;
    let sch = &cfg.schedule;
    if !(sch.t_min > 0.0 && sch.t_end > sch.t_min) {
        return Err(CliError::Config(format!(
            "schedule needs 0 < t_min < t_end: got t_min={}, t_end={}",
            sch.t_min, sch.t_end
        )));
    }
    if sch.per_decade == 0 {
        return Err(CliError::Config("schedule.per_decade must be positive".into()));
    }
    if cfg.kind == VerdictSlow && sch.dyadic_count < fpme_core::asymptotics::MIN_DYADIC_TIMES {
        return Err(CliError::Config(format!(
            "schedule.dyadic_count must be at least {}, got {}",
            fpme_core::asymptotics::MIN_DYADIC_TIMES,
            sch.dyadic_count
        )));
    }
    if !(sch.dyadic_base > 0.0) {
        return Err(CliError::Config(format!(
            "schedule.dyadic_base must be positive, got {}",
            sch.dyadic_base
        )));
    }
    let e = &cfg.elliptic;
    if wants_fast && !fpme_core::elliptic::green_kernel_names().any(|k| k == e.kernel) {
        return Err(CliError::Config(format!("unknown elliptic.kernel `{}`", e.kernel)));
    }
    if !(e.tol > 0.0) || e.max_iterations == 0 {
        return Err(CliError::Config(
            "elliptic.tol and elliptic.max_iterations must be positive".into(),
        ));
    }
    if cfg.kind == VerdictFast && e.input.is_none() {
        return Err(CliError::Config(
            "verdict-fast requires elliptic.input: path to a w field written by solve-elliptic".into(),
        ));
    }
    if cfg.kind == Report && cfg.report.inputs.is_empty() {
        return Err(CliError::Config(
            "report requires at least one directory in report.inputs".into(),
        ));
    }
    Ok(())
}
