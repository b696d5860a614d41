use std::fmt::Write as _;

use fpme_core::pme::{log_schedule, weighted_mass};

use super::{datum, evolve, model, Experiment};
use crate::artifacts::{Artifacts, Outcome};
use crate::config::{ExperimentKind, RunConfig};
use crate::error::CliError;

pub struct RunParabolic;

impl Experiment for RunParabolic {
    fn kind(&self) -> ExperimentKind {
        ExperimentKind::RunParabolic
    }

    fn describe(&self) -> &'static str {
        "explicit evolution with logarithmic snapshots and a mass ledger"
    }

    fn run(&self, cfg: &RunConfig, out: &mut Artifacts) -> Result<Outcome, CliError> {
        let model = model(cfg)?;
        let u0 = datum(cfg, &model)?;
        let m0 = weighted_mass(&u0, model.rho())?;
        let sch = &cfg.schedule;
        let times = log_schedule(sch.t_min, sch.t_end, sch.per_decade)?;
        let st = evolve(cfg, &model, u0, sch.t_end, &times, &mut [])?;

        let mut csv = String::from("t,step,mass,sup,l2,energy,dissipation,leaked\n");
        for r in st.history() {
            let _ = writeln!(
                csv,
                "{:e},{},{:e},{:e},{:e},{:e},{:e},{:e}",
                r.t, r.step, r.mass, r.sup, r.l2, r.energy, r.dissipation, r.leaked
            );
        }
        out.text("history.csv", "plot-csv", &csv)?;
        out.field("u_final", st.u(), cfg.model.s)?;

        let balance = (st.mass() + st.leaked() - m0).abs() / m0;
        if balance > cfg.thresholds.mass_balance {
            return Err(CliError::Invariant(format!(
                "mass balance off by {balance:e} of the initial mass (limit {:e})",
                cfg.thresholds.mass_balance
            )));
        }
        Ok(Outcome::new(
            true,
            format!("{} steps to t={}, mass balance {balance:.2e}", st.steps(), st.t()),
        )
        .metric("steps", st.steps())
        .metric("initial_mass", m0)
        .metric("final_mass", st.mass())
        .metric("leaked", st.leaked())
        .metric("leaked_fraction", st.leaked() / m0)
        .metric("mass_balance", balance)
        .metric("final_sup", st.u().sup_norm()))
    }
}
