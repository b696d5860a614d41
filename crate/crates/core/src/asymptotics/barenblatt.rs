use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{rescaled_profile, scaling_exponents, MaskedField, ScalingExponents};
use crate::density::{DensityKind, DensityModel};
use crate::error::{Error, Result};
use crate::operators::QuadratureOperator;
use crate::pme::{bump_datum, EvolutionState, SnapshotLog};

/// Numerical profile of the source-type solution at unit time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BarenblattProfile {
    pub profile: MaskedField,
    pub t_ref: f64,
    pub mass: f64,
    pub c_inf: f64,
    pub gamma: f64,
    pub eps_reg: f64,
    /// Fraction of the mass carried through the exterior by `t_ref`.
    pub leaked_fraction: f64,
}

/// Runs the pure-power problem from a bump of width `h` and weighted mass `M`, and
/// rescales the snapshots at each time in `t_refs`.
pub fn barenblatt_profiles(model: &DensityModel, t_refs: &[f64], max_leak: f64) -> Result<Vec<BarenblattProfile>> {
    if model.kind() != DensityKind::PurePower {
        return Err(Error::InvalidParameter(format!(
            "Barenblatt profiles need the pure-power weight, got {}",
            model.kind().name()
        )));
    }
    if t_refs.is_empty() || t_refs.windows(2).any(|w| w[1] <= w[0]) || t_refs[0] <= 0.0 {
        return Err(Error::InvalidParameter(
            "extraction times must be positive and increasing".into(),
        ));
    }
    let p = *model.params();
    let exps: ScalingExponents = scaling_exponents(&p)?;
    let op = Arc::new(QuadratureOperator::new(*model.grid(), p.s)?);
    let u0 = bump_datum(model.rho(), p.mass, [0.0, 0.0], model.grid().spacing())?;
    let mut state = EvolutionState::new(model.clone(), op, u0, f64::INFINITY)?;
    let mut snaps = SnapshotLog::default();
    let t_end = *t_refs.last().unwrap_or(&0.0);
    state.evolve(t_end, t_refs, &mut [&mut snaps])?;

    t_refs
        .iter()
        .map(|&t| {
            let rec = state
                .history()
                .iter()
                .find(|r| (r.t - t).abs() <= 1e-12 * t)
                .ok_or_else(|| Error::InsufficientData(format!("no record at t={t}")))?;
            let leaked_fraction = rec.leaked / p.mass;
            if leaked_fraction > max_leak {
                return Err(Error::MassLeakage {
                    leak: leaked_fraction,
                    tol: max_leak,
                });
            }
            let u = snaps
                .at(t)
                .ok_or_else(|| Error::InsufficientData(format!("no snapshot at t={t}")))?;
            Ok(BarenblattProfile {
                profile: rescaled_profile(u, t, &exps)?,
                t_ref: t,
                mass: p.mass,
                c_inf: p.c_inf,
                gamma: p.gamma,
                eps_reg: p.eps_reg,
                leaked_fraction,
            })
        })
        .collect()
}

pub fn barenblatt_profile(model: &DensityModel, t_ref: f64, max_leak: f64) -> Result<BarenblattProfile> {
    let mut v = barenblatt_profiles(model, &[t_ref], max_leak)?;
    Ok(v.remove(0))
}
