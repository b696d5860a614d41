//! Experiment registry. Each kind is a trait object looked up by name.

use std::sync::Arc;

use fpme_core::density::{make_density, DensityModel};
use fpme_core::grid::Field;
use fpme_core::operators::QuadratureOperator;
use fpme_core::pme::{bimodal_datum, bump_datum, EvolutionState, Observer};

use crate::artifacts::{Artifacts, Outcome};
use crate::config::{DatumShape, ExperimentKind, RunConfig};
use crate::error::CliError;

mod asymptotic;
mod elliptic;
mod operators;
mod parabolic;
mod report;

pub trait Experiment: Sync {
    fn kind(&self) -> ExperimentKind;

    fn describe(&self) -> &'static str;

    fn run(&self, cfg: &RunConfig, out: &mut Artifacts) -> Result<Outcome, CliError>;
}

static REGISTRY: [&dyn Experiment; 7] = [
    &operators::ValidateOperators,
    &parabolic::RunParabolic,
    &elliptic::SolveElliptic,
    &asymptotic::Barenblatt,
    &asymptotic::VerdictSlow,
    &asymptotic::VerdictFast,
    &report::Report,
];

pub fn registry() -> &'static [&'static dyn Experiment] {
    &REGISTRY
}

pub fn lookup(kind: ExperimentKind) -> &'static dyn Experiment {
    *REGISTRY
        .iter()
        .find(|e| e.kind() == kind)
        .expect("every kind is registered")
}

fn model(cfg: &RunConfig) -> Result<DensityModel, CliError> {
    Ok(make_density(cfg.model.density, cfg.params(), cfg.grid()?)?)
}

fn datum(cfg: &RunConfig, model: &DensityModel) -> Result<Field, CliError> {
    let d = &cfg.datum;
    let rho = model.rho();
    Ok(match d.shape {
        DatumShape::Bump => bump_datum(rho, cfg.model.mass, [d.center, 0.0], 4.0 * rho.grid().spacing())?,
        DatumShape::Bimodal => bimodal_datum(rho, cfg.model.mass, d.separation)?,
    })
}

fn evolve(
    cfg: &RunConfig,
    model: &DensityModel,
    u0: Field,
    t_end: f64,
    times: &[f64],
    observers: &mut [&mut dyn Observer],
) -> Result<EvolutionState, CliError> {
    let op = QuadratureOperator::new(*model.grid(), cfg.model.s)?.with_tail(cfg.operator.tail);
    let mut st = EvolutionState::new(model.clone(), Arc::new(op), u0, f64::INFINITY)?;
    st.evolve(t_end, times, observers)?;
    Ok(st)
}
