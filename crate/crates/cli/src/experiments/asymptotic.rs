use std::fs;

use fpme_core::asymptotics::*;
use fpme_core::density::{make_density, DensityKind, DensityModel};
use fpme_core::grid::Field;
use fpme_core::io::read_field_binary;
use fpme_core::pme::{dyadic_schedule, log_schedule, SnapshotLog};

use super::elliptic::{problem, EllipticSidecar};
use super::{datum, evolve, model, Experiment};
use crate::artifacts::{Artifacts, Outcome};
use crate::config::{ExperimentKind, RunConfig};
use crate::error::CliError;

pub struct Barenblatt;
pub struct VerdictSlow;
pub struct VerdictFast;

/// Pure-power weight with the configured constants and `ε_reg = eps_over_h · h`.
fn pure_power(cfg: &RunConfig) -> Result<DensityModel, CliError> {
    let grid = cfg.grid()?;
    let mut p = cfg.params();
    p.eps_reg = cfg.barenblatt.eps_over_h * grid.spacing();
    p.set_natural_envelope();
    Ok(make_density(DensityKind::PurePower, p, grid)?)
}

fn masked(p: &MaskedField) -> Field {
    let mut f = p.field.clone();
    for (v, ok) in f.values_mut().iter_mut().zip(&p.valid) {
        if !ok {
            *v = f64::NAN;
        }
    }
    f
}

fn verdict_outcome(v: &AsymptoticVerdict, out: &mut Artifacts) -> Result<Outcome, CliError> {
    out.json("verdict.json", "verdict", v)?;
    out.text("verdict.csv", "plot-csv", &v.to_csv())?;
    Ok(Outcome::new(
        v.pass,
        format!(
            "final distance {:.4} (threshold {}), monotone {}",
            v.final_error, v.threshold, v.monotone
        ),
    )
    .metric("final_error", v.final_error)
    .metric("monotone", v.monotone)
    .metric("times", v.history.len())
    .metric("bound", v.bound)
    .metric("sup_error", v.sup_error))
}

impl Experiment for Barenblatt {
    fn kind(&self) -> ExperimentKind {
        ExperimentKind::Barenblatt
    }

    fn describe(&self) -> &'static str {
        "Barenblatt profile extraction at t_ref and 4 t_ref"
    }

    fn run(&self, cfg: &RunConfig, out: &mut Artifacts) -> Result<Outcome, CliError> {
        let pure = pure_power(cfg)?;
        let t_ref = cfg.barenblatt.t_ref;
        let pr = barenblatt_profiles(&pure, &[t_ref, 4.0 * t_ref], cfg.barenblatt.max_leak)?;
        let (g, eps) = (cfg.model.gamma, pr[0].eps_reg);
        let gap =
            weighted_l1_distance(&pr[0].profile, &pr[1].profile, g, eps)? / weighted_l1_norm(&pr[0].profile, g, eps);
        out.field("barenblatt", &masked(&pr[0].profile), cfg.model.s)?;
        out.field("barenblatt_4t", &masked(&pr[1].profile), cfg.model.s)?;
        let pass = gap <= cfg.thresholds.self_similarity;
        Ok(Outcome::new(
            pass,
            format!("self-similarity gap {gap:.4} between t={t_ref} and t={}", 4.0 * t_ref),
        )
        .metric("self_similarity_gap", gap)
        .metric("eps_reg", eps)
        .metric("leaked_fraction", [pr[0].leaked_fraction, pr[1].leaked_fraction]))
    }
}

impl Experiment for VerdictSlow {
    fn kind(&self) -> ExperimentKind {
        ExperimentKind::VerdictSlow
    }

    fn describe(&self) -> &'static str {
        "weighted L¹ distance to the Barenblatt profile at dyadic times"
    }

    fn run(&self, cfg: &RunConfig, out: &mut Artifacts) -> Result<Outcome, CliError> {
        let model = model(cfg)?;
        let profile = barenblatt_profile(&pure_power(cfg)?, cfg.barenblatt.t_ref, cfg.barenblatt.max_leak)?;
        let times = dyadic_schedule(cfg.schedule.dyadic_base, cfg.schedule.dyadic_count);
        let mut snaps = SnapshotLog::default();
        let t_end = *times.last().expect("dyadic count checked");
        let st = evolve(cfg, &model, datum(cfg, &model)?, t_end, &times, &mut [&mut snaps])?;
        out.field("u_final", st.u(), cfg.model.s)?;
        let v = slow_decay_verdict(&snaps, &model, &profile, &times, cfg.thresholds.slow)?;
        verdict_outcome(&v, out)
    }
}

fn load_w(cfg: &RunConfig) -> Result<Field, CliError> {
    let path = cfg.elliptic.input.as_ref().expect("validated");
    let bytes =
        fs::read(path).map_err(|e| CliError::Config(format!("cannot read elliptic.input {}: {e}", path.display())))?;
    let (w, s) =
        read_field_binary(bytes.as_slice()).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let g = cfg.grid()?;
    if *w.grid() != g || s != cfg.model.s {
        return Err(CliError::Config(format!(
            "{} holds a field for dim={}, n={}, L={}, s={s}; the run uses dim={}, n={}, L={}, s={}",
            path.display(),
            w.grid().dim(),
            w.grid().n_per_axis(),
            w.grid().half_extent(),
            g.dim(),
            g.n_per_axis(),
            g.half_extent(),
            cfg.model.s
        )));
    }
    if let Ok(text) = fs::read_to_string(path.with_extension("json")) {
        let side: EllipticSidecar =
            serde_json::from_str(&text).map_err(|e| CliError::Config(format!("bad sidecar: {e}")))?;
        if side.kernel != cfg.elliptic.kernel || side.alpha != cfg.elliptic.alpha || side.gamma != cfg.model.gamma {
            return Err(CliError::Config(format!(
                "w was solved with kernel={}, α={}, γ={}; the run uses kernel={}, α={}, γ={}",
                side.kernel, side.alpha, side.gamma, cfg.elliptic.kernel, cfg.elliptic.alpha, cfg.model.gamma
            )));
        }
    }
    Ok(w)
}

impl Experiment for VerdictFast {
    fn kind(&self) -> ExperimentKind {
        ExperimentKind::VerdictFast
    }

    fn describe(&self) -> &'static str {
        "inner-region L¹ error of t^{1/(m-1)} u against C_m w^{1/m}"
    }

    fn run(&self, cfg: &RunConfig, out: &mut Artifacts) -> Result<Outcome, CliError> {
        let w = load_w(cfg)?;
        let pb = problem(cfg)?;
        let model = pb.model().clone();
        let sch = &cfg.schedule;
        let times = log_schedule(sch.t_min, sch.t_end, sch.per_decade)?;
        let mut snaps = SnapshotLog::default();
        let st = evolve(cfg, &model, datum(cfg, &model)?, sch.t_end, &times, &mut [&mut snaps])?;
        out.field("u_final", st.u(), cfg.model.s)?;
        let v = fast_decay_verdict(&snaps, &model, &pb, &w, &times, cfg.thresholds.fast)?;
        if let Some(b) = v.bound.filter(|b| !b.holds) {
            verdict_outcome(&v, out)?;
            return Err(CliError::Invariant(format!(
                "u exceeds C_m t^(-1/(m-1)) w^(1/m) by {:e} of its sup",
                b.worst_violation
            )));
        }
        verdict_outcome(&v, out)
    }
}
