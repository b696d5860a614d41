//! Explicit time integration of `ρ u_t + (-Δ)^s(u^m) = 0` on the monotone
//! quadrature operator.

mod diagnostics;
mod schedule;

pub use diagnostics::*;
pub use schedule::{dyadic_schedule, log_schedule};

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::density::DensityModel;
use crate::error::{Error, Result};
use crate::grid::Field;
use crate::operators::QuadratureOperator;

/// Safety factor applied to the monotonicity bound of the explicit step.
pub const CFL_SAFETY: f64 = 0.9;

/// Relative size of the negative values tolerated as round-off.
pub const NEGATIVITY_SLACK: f64 = 1e-14;

/// One row of the run log, recorded at every scheduled time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub t: f64,
    pub step: usize,
    pub mass: f64,
    pub sup: f64,
    pub l2: f64,
    pub energy: f64,
    pub dissipation: f64,
    /// Mass carried through the exterior so far, `Σ_k dt_k Σ_i T_i u_i^m h^d`.
    pub leaked: f64,
}

/// Callbacks fired while a state evolves.
pub trait Observer {
    /// After every step; `prev` is the field before the step.
    fn on_step(&mut self, _prev: &Field, _state: &EvolutionState, _dt: f64) -> Result<()> {
        Ok(())
    }

    /// On landing at a scheduled time.
    fn on_schedule(&mut self, _state: &EvolutionState) -> Result<()> {
        Ok(())
    }
}

/// Snapshots of `u` at every scheduled time.
#[derive(Debug, Clone, Default)]
pub struct SnapshotLog {
    pub times: Vec<f64>,
    pub fields: Vec<Field>,
}

impl Observer for SnapshotLog {
    fn on_schedule(&mut self, state: &EvolutionState) -> Result<()> {
        self.times.push(state.t());
        self.fields.push(state.u().clone());
        Ok(())
    }
}

impl SnapshotLog {
    pub fn at(&self, t: f64) -> Option<&Field> {
        self.times
            .iter()
            .position(|&s| (s - t).abs() <= 1e-12 * t.abs().max(1.0))
            .map(|k| &self.fields[k])
    }
}

#[derive(Debug, Clone)]
pub struct EvolutionState {
    t: f64,
    u: Field,
    model: DensityModel,
    op: Arc<QuadratureOperator>,
    dt_max: f64,
    theta: f64,
    /// `min_i ρ_i / A_ii`.
    stiffness: f64,
    steps: usize,
    leaked: f64,
    history: Vec<Record>,
}

/// `|u|^{m-1} u`, equal to `u^m` on nonnegative values.
fn signed_power(u: f64, m: f64) -> f64 {
    u.abs().powf(m - 1.0) * u
}

impl EvolutionState {
    pub fn new(model: DensityModel, op: Arc<QuadratureOperator>, u0: Field, dt_max: f64) -> Result<Self> {
        use crate::operators::FractionalLaplacian;
        if op.grid() != model.grid() {
            return Err(Error::GridMismatch);
        }
        u0.ensure_same_grid(model.rho())?;
        if (op.order() - model.params().s).abs() > 1e-15 {
            return Err(Error::InvalidParameter(format!(
                "operator order {} differs from model order {}",
                op.order(),
                model.params().s
            )));
        }
        if !(dt_max > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "dt_max must be positive, got {dt_max}"
            )));
        }
        if !u0.is_finite() || u0.min() < 0.0 {
            return Err(Error::InvalidParameter(
                "initial datum must be finite and nonnegative".into(),
            ));
        }
        let stiffness = (0..u0.grid().len())
            .map(|i| model.rho().values()[i] / op.diagonal(i))
            .fold(f64::INFINITY, f64::min);
        let mut state = Self {
            t: 0.0,
            u: u0,
            model,
            op,
            dt_max,
            theta: CFL_SAFETY,
            stiffness,
            steps: 0,
            leaked: 0.0,
            history: Vec::new(),
        };
        state.record();
        Ok(state)
    }

    /// Restarts the clock at `t0` without touching the datum.
    pub fn starting_at(mut self, t0: f64) -> Result<Self> {
        if !(t0 >= 0.0 && t0.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "start time must be finite and nonnegative, got {t0}"
            )));
        }
        self.t = t0;
        self.steps = 0;
        self.leaked = 0.0;
        self.history.clear();
        self.record();
        Ok(self)
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn u(&self) -> &Field {
        &self.u
    }

    pub fn rho(&self) -> &Field {
        self.model.rho()
    }

    pub fn model(&self) -> &DensityModel {
        &self.model
    }

    pub fn m(&self) -> f64 {
        self.model.params().m
    }

    pub fn operator(&self) -> &Arc<QuadratureOperator> {
        &self.op
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn leaked(&self) -> f64 {
        self.leaked
    }

    pub fn dt_max(&self) -> f64 {
        self.dt_max
    }

    pub fn history(&self) -> &[Record] {
        &self.history
    }

    pub fn mass(&self) -> f64 {
        weighted_mass(&self.u, self.rho()).expect("state fields share a grid")
    }

    /// Largest step keeping the scheme monotone, capped by `dt_max`.
    pub fn cfl_dt(&self) -> f64 {
        let top = self.u.max();
        if top <= 0.0 {
            return self.dt_max;
        }
        let m = self.m();
        (self.theta * self.stiffness / (m * top.powf(m - 1.0))).min(self.dt_max)
    }

    /// One forward Euler step `u' = u - dt ρ⁻¹ A(u^m)`.
    pub fn step(&mut self, dt: f64) -> Result<()> {
        let bound = self.cfl_dt();
        if !(dt > 0.0) || dt > bound * (1.0 + 1e-12) {
            return Err(Error::CflViolation { dt, bound });
        }
        let m = self.m();
        let um: Vec<f64> = self.u.values().iter().map(|&v| signed_power(v, m)).collect();
        let au = self.op.apply_values(&um);
        let rho = self.model.rho().values();
        let sup = self.u.sup_norm();
        let next: Vec<f64> = self
            .u
            .values()
            .iter()
            .zip(&au)
            .zip(rho)
            .map(|((&u, &a), &r)| u - dt * a / r)
            .collect();
        if let Some((node, &value)) = next
            .iter()
            .enumerate()
            .find(|(_, &v)| v < -NEGATIVITY_SLACK * sup || !v.is_finite())
        {
            return Err(Error::NegativeValue { node, value, sup });
        }
        if self.op.tail_enabled() {
            let hd = self.u.grid().cell_volume();
            let out: f64 = self.op.tail().iter().zip(&um).map(|(t, v)| t * v).sum();
            self.leaked += dt * out * hd;
        }
        self.u.values_mut().copy_from_slice(&next);
        self.t += dt;
        self.steps += 1;
        Ok(())
    }

    fn record(&mut self) {
        let (energy, dissipation) = self.energy_report();
        let rho = self.rho();
        let hd = self.u.grid().cell_volume();
        let l2 = self
            .u
            .values()
            .iter()
            .zip(rho.values())
            .map(|(u, r)| u * u * r)
            .sum::<f64>()
            * hd;
        let rec = Record {
            t: self.t,
            step: self.steps,
            mass: self.mass(),
            sup: self.u.sup_norm(),
            l2: l2.sqrt(),
            energy,
            dissipation,
            leaked: self.leaked,
        };
        self.history.push(rec);
    }

    /// `E = Σ u^{m+1} ρ h^d / (m+1)` and `D = ⟨A u^m, u^m⟩ h^d`.
    pub fn energy_report(&self) -> (f64, f64) {
        energy_report(&self.u, self.rho(), &self.op, self.m())
    }

    /// Steps to `t_end`, landing exactly on every scheduled time in between.
    pub fn evolve(&mut self, t_end: f64, schedule: &[f64], observers: &mut [&mut dyn Observer]) -> Result<()> {
        if t_end < self.t {
            return Err(Error::InvalidParameter(format!(
                "cannot evolve backwards from t={} to t={t_end}",
                self.t
            )));
        }
        // A schedule point at the current time is reported without stepping.
        if schedule.iter().any(|&s| (s - self.t).abs() <= 1e-12 * self.t.abs()) {
            for obs in observers.iter_mut() {
                obs.on_schedule(self)?;
            }
        }
        for target in landing_points(self.t, t_end, schedule) {
            while self.t < target {
                let cfl = self.cfl_dt();
                let remaining = target - self.t;
                let lands = remaining <= cfl * (1.0 + 1e-9);
                let dt = if lands { remaining.min(cfl) } else { cfl };
                let prev = self.u.clone();
                self.step(dt)?;
                if lands {
                    self.t = target;
                }
                for obs in observers.iter_mut() {
                    obs.on_step(&prev, self, dt)?;
                }
            }
            self.record();
            for obs in observers.iter_mut() {
                obs.on_schedule(self)?;
            }
        }
        Ok(())
    }
}

fn landing_points(t: f64, t_end: f64, schedule: &[f64]) -> Vec<f64> {
    let mut pts: Vec<f64> = schedule.iter().copied().filter(|&s| s > t && s < t_end).collect();
    if t_end > t {
        pts.push(t_end);
    }
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    pts
}

/// Advances several states with a common step, as required when runs are
/// compared nodewise. `on_schedule` sees all states at every landing time.
pub fn evolve_lockstep(
    states: &mut [EvolutionState],
    t_end: f64,
    schedule: &[f64],
    mut on_schedule: impl FnMut(&[EvolutionState]) -> Result<()>,
) -> Result<()> {
    let Some(first) = states.first() else {
        return Ok(());
    };
    let t0 = first.t;
    if states.iter().any(|s| s.t != t0 || s.u.grid() != first.u.grid()) {
        return Err(Error::InvalidParameter("lockstep runs must share grid and time".into()));
    }
    for target in landing_points(t0, t_end, schedule) {
        while states[0].t < target {
            let cfl = states.iter().map(EvolutionState::cfl_dt).fold(f64::INFINITY, f64::min);
            let remaining = target - states[0].t;
            let lands = remaining <= cfl * (1.0 + 1e-9);
            let dt = if lands { remaining.min(cfl) } else { cfl };
            for s in states.iter_mut() {
                s.step(dt)?;
                if lands {
                    s.t = target;
                }
            }
        }
        for s in states.iter_mut() {
            s.record();
        }
        on_schedule(states)?;
    }
    Ok(())
}

pub fn weighted_mass(u: &Field, rho: &Field) -> Result<f64> {
    u.ensure_same_grid(rho)?;
    Ok(u.values().iter().zip(rho.values()).map(|(a, b)| a * b).sum::<f64>() * u.grid().cell_volume())
}

pub fn energy_report(u: &Field, rho: &Field, op: &QuadratureOperator, m: f64) -> (f64, f64) {
    let hd = u.grid().cell_volume();
    let energy = u
        .values()
        .iter()
        .zip(rho.values())
        .map(|(&v, &r)| v.powf(m + 1.0) * r)
        .sum::<f64>()
        * hd
        / (m + 1.0);
    let um: Vec<f64> = u.values().iter().map(|&v| signed_power(v, m)).collect();
    let au = op.apply_values(&um);
    let dissipation = au.iter().zip(&um).map(|(a, b)| a * b).sum::<f64>() * hd;
    (energy, dissipation)
}

/// Bump `(ε² + |x - c|²)^{-(d+2)/2}` of width `ε`, scaled to weighted mass `mass`.
pub fn bump_datum(rho: &Field, mass: f64, center: [f64; 2], width: f64) -> Result<Field> {
    if !(width > 0.0 && mass > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "bump needs positive width and mass, got width={width}, mass={mass}"
        )));
    }
    let grid = *rho.grid();
    let p = -0.5 * (grid.dim() as f64 + 2.0);
    let shape = Field::from_fn(grid, |[x, y]| {
        let dx = x - center[0];
        let dy = if grid.dim() == 2 { y - center[1] } else { 0.0 };
        (width * width + dx * dx + dy * dy).powf(p)
    });
    let raw = weighted_mass(&shape, rho)?;
    Ok(shape.scaled(mass / raw))
}

/// Bump of the standard width `4h` centred at `center`.
pub fn standard_bump(rho: &Field, mass: f64, center: [f64; 2]) -> Result<Field> {
    bump_datum(rho, mass, center, 4.0 * rho.grid().spacing())
}

/// Two standard bumps carrying `0.6 M` at `-a` and `0.4 M` at `1.5 a` along the first axis.
pub fn bimodal_datum(rho: &Field, mass: f64, a: f64) -> Result<Field> {
    let left = standard_bump(rho, 0.6 * mass, [-a, 0.0])?;
    let right = standard_bump(rho, 0.4 * mass, [1.5 * a, 0.0])?;
    left.zip_map(&right, |p, q| p + q)
}
