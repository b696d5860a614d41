use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{rescaled_profile, scaling_exponents, separable_constant, weighted_l1_distance, BarenblattProfile};
use crate::density::DensityModel;
use crate::elliptic::EllipticProblem;
use crate::error::{Error, Result};
use crate::grid::Field;
use crate::pme::SnapshotLog;

pub const SLOW_THRESHOLD: f64 = 0.10;
pub const FAST_THRESHOLD: f64 = 0.05;
pub const MIN_DYADIC_TIMES: usize = 6;
/// Nodewise slack on the monotonicity of `v`, relative to `‖v‖_∞`.
pub const MONOTONE_SLACK: f64 = 1e-10;
/// Nodewise slack on the universal upper bound, relative to `‖u‖_∞`.
pub const BOUND_SLACK: f64 = 1e-8;
pub const INNER_FRACTION: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    Slow,
    Fast,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistoryPoint {
    pub t: f64,
    pub distance: f64,
}

/// Nodewise upper bound `u ≤ C_m t^{-1/(m-1)} w^{1/m}` over the logged times.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundCheck {
    /// Largest `max_i (u_i - bound_i) / ‖u‖_∞`; negative when the bound holds strictly.
    pub worst_violation: f64,
    pub slack: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticVerdict {
    pub regime: Regime,
    pub history: Vec<HistoryPoint>,
    /// Slow: the distance is nonincreasing over the trailing half of the history.
    /// Fast: `v` is nondecreasing nodewise between consecutive times.
    pub monotone: bool,
    /// Slow: length of the nonincreasing tail. Fast: smallest increment of `v` relative to `‖v‖_∞`.
    pub monotone_measure: f64,
    pub bound: Option<BoundCheck>,
    pub final_error: f64,
    /// Fast: sup of the relative error over the inner region at the last time.
    pub sup_error: Option<f64>,
    pub threshold: f64,
    pub pass: bool,
}

impl AsymptoticVerdict {
    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::InvalidParameter(e.to_string()))
    }

    /// `t,distance` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,distance\n");
        for p in &self.history {
            let _ = writeln!(out, "{:e},{:e}", p.t, p.distance);
        }
        out
    }
}

/// Length of the longest nonincreasing suffix.
fn nonincreasing_tail(values: &[f64]) -> usize {
    if values.is_empty() {
        return 0;
    }
    let mut len = 1;
    for k in (1..values.len()).rev() {
        if values[k] <= values[k - 1] {
            len += 1;
        } else {
            break;
        }
    }
    len
}

/// Weighted `L¹` distance between the rescaled run and the Barenblatt profile at each time in `times`,
/// normalized by `M / c_∞`.
pub fn slow_decay_verdict(
    snapshots: &SnapshotLog,
    model: &DensityModel,
    barenblatt: &BarenblattProfile,
    times: &[f64],
    threshold: f64,
) -> Result<AsymptoticVerdict> {
    let p = model.params();
    if !p.is_slow() {
        return Err(Error::Regime(format!(
            "slow regime requires γ < 2s: got γ={}, s={}",
            p.gamma, p.s
        )));
    }
    barenblatt.profile.field.ensure_same_grid(model.rho())?;
    if (barenblatt.gamma - p.gamma).abs() > 1e-15 || (barenblatt.c_inf - p.c_inf).abs() > 1e-15 {
        return Err(Error::InvalidParameter(format!(
            "Barenblatt weight {}|x|^-{} does not match the run's far field {}|x|^-{}",
            barenblatt.c_inf, barenblatt.gamma, p.c_inf, p.gamma
        )));
    }
    let exps = scaling_exponents(p)?;
    let scale = p.mass / p.c_inf;
    let target = &barenblatt.profile;
    let mut history = Vec::with_capacity(times.len());
    for &t in times {
        let u = snapshots
            .at(t)
            .ok_or_else(|| Error::InsufficientData(format!("no snapshot at t={t}")))?;
        let profile = match rescaled_profile(u, t, &exps) {
            Ok(p) => p,
            Err(Error::InsufficientData(_)) => break,
            Err(e) => return Err(e),
        };
        let d = weighted_l1_distance(&profile, target, p.gamma, barenblatt.eps_reg)? / scale;
        history.push(HistoryPoint { t, distance: d });
    }
    if history.len() < MIN_DYADIC_TIMES {
        return Err(Error::InsufficientData(format!(
            "only {} of the requested times fit in the box; need {MIN_DYADIC_TIMES}",
            history.len()
        )));
    }
    let distances: Vec<f64> = history.iter().map(|h| h.distance).collect();
    let tail = nonincreasing_tail(&distances);
    let monotone = 2 * tail >= distances.len() && tail >= 3;
    let final_error = *distances.last().unwrap_or(&f64::INFINITY);
    Ok(AsymptoticVerdict {
        regime: Regime::Slow,
        history,
        monotone,
        monotone_measure: tail as f64,
        bound: None,
        final_error,
        sup_error: None,
        threshold,
        pass: monotone && final_error <= threshold,
    })
}

/// Checks the long-time behaviour of a fast-regime run against the separable profile `C_m w^{1/m}`.
pub fn fast_decay_verdict(
    snapshots: &SnapshotLog,
    model: &DensityModel,
    problem: &EllipticProblem,
    w: &Field,
    times: &[f64],
    threshold: f64,
) -> Result<AsymptoticVerdict> {
    let p = model.params();
    if !p.is_fast() {
        return Err(Error::Regime(format!(
            "fast regime requires γ > 2s: got γ={}, s={}",
            p.gamma, p.s
        )));
    }
    w.ensure_same_grid(model.rho())?;
    if problem.model().rho() != model.rho() {
        return Err(Error::InvalidParameter(
            "elliptic solution was computed for a different weight".into(),
        ));
    }
    if (problem.alpha() - 1.0 / p.m).abs() > 1e-12 {
        return Err(Error::InvalidParameter(format!(
            "elliptic exponent must be 1/m = {}, got {}",
            1.0 / p.m,
            problem.alpha()
        )));
    }
    if times.len() < 2 {
        return Err(Error::InsufficientData("fast verdict needs at least two times".into()));
    }
    let q = 1.0 / (p.m - 1.0);
    let profile = w.map(|v| separable_constant(p.m) * v.max(0.0).powf(1.0 / p.m));
    let inner = model.grid().inner_mask(INNER_FRACTION);
    let inner_norm: f64 = (0..inner.len())
        .filter(|&k| inner[k])
        .map(|k| profile.values()[k])
        .sum();

    let mut worst_violation = f64::NEG_INFINITY;
    for (&t, u) in snapshots.times.iter().zip(&snapshots.fields) {
        if t <= 0.0 {
            continue;
        }
        let sup = u.sup_norm().max(f64::MIN_POSITIVE);
        let bound = t.powf(-q);
        let worst = u
            .values()
            .iter()
            .zip(profile.values())
            .map(|(a, b)| (a - bound * b) / sup)
            .fold(f64::NEG_INFINITY, f64::max);
        worst_violation = worst_violation.max(worst);
    }

    let mut history = Vec::with_capacity(times.len());
    let mut min_increment = f64::INFINITY;
    let mut prev: Option<Field> = None;
    let mut sup_error = 0.0;
    for &t in times {
        let u = snapshots
            .at(t)
            .ok_or_else(|| Error::InsufficientData(format!("no snapshot at t={t}")))?;
        let v = u.scaled(t.powf(q));
        if let Some(prev) = &prev {
            let norm = v.sup_norm().max(f64::MIN_POSITIVE);
            let inc = v.zip_map(prev, |a, b| (a - b) / norm)?.min();
            min_increment = min_increment.min(inc);
        }
        let l1: f64 = (0..inner.len())
            .filter(|&k| inner[k])
            .map(|k| (v.values()[k] - profile.values()[k]).abs())
            .sum();
        history.push(HistoryPoint {
            t,
            distance: l1 / inner_norm,
        });
        sup_error = (0..inner.len())
            .filter(|&k| inner[k])
            .map(|k| (v.values()[k] / profile.values()[k] - 1.0).abs())
            .fold(0.0, f64::max);
        prev = Some(v);
    }
    let monotone = min_increment >= -MONOTONE_SLACK;
    let bound = BoundCheck {
        worst_violation,
        slack: BOUND_SLACK,
        holds: worst_violation <= BOUND_SLACK,
    };
    let final_error = history.last().map_or(f64::INFINITY, |h| h.distance);
    Ok(AsymptoticVerdict {
        regime: Regime::Fast,
        history,
        monotone,
        monotone_measure: min_increment,
        pass: monotone && bound.holds && final_error <= threshold,
        bound: Some(bound),
        final_error,
        sup_error: Some(sup_error),
        threshold,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tail_length() {
        assert_eq!(nonincreasing_tail(&[]), 0);
        assert_eq!(nonincreasing_tail(&[1.0]), 1);
        assert_eq!(nonincreasing_tail(&[1.0, 2.0, 1.5, 1.5, 0.3]), 4);
        assert_eq!(nonincreasing_tail(&[3.0, 2.0, 2.5]), 1);
    }
}
