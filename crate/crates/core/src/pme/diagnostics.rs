use serde::{Deserialize, Serialize};

use crate::asymptotics::ScalingExponents;
use crate::density::DensityModel;
use crate::error::{Error, Result};
use crate::grid::Field;
use crate::operators::RieszOperator;

use super::{signed_power, EvolutionState, Observer, Record, SnapshotLog};

/// Least-squares slope and intercept of `y` against `x`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoothingFit {
    pub alpha: f64,
    pub alpha_hat: f64,
    /// `max_t ‖u(t)‖_∞ t^α M^{-β}` over the fit window.
    pub k_hat: f64,
    pub decades: f64,
    pub samples: usize,
}

impl SmoothingFit {
    pub fn within(&self, tol: f64) -> bool {
        (self.alpha_hat - self.alpha).abs() <= tol && self.k_hat.is_finite()
    }
}

/// Fits `‖u(t)‖_∞ ~ t^{-α}` over the logged times in `[t_from, t_to]`.
pub fn smoothing_diagnostic(
    history: &[Record],
    exponents: &ScalingExponents,
    mass: f64,
    t_from: f64,
    t_to: f64,
) -> Result<SmoothingFit> {
    let rows: Vec<&Record> = history
        .iter()
        .filter(|r| r.t >= t_from * (1.0 - 1e-9) && r.t <= t_to * (1.0 + 1e-9) && r.sup > 0.0)
        .collect();
    let (Some(first), Some(last)) = (rows.first(), rows.last()) else {
        return Err(Error::InsufficientData("no logged times in the fit window".into()));
    };
    let decades = (last.t / first.t).log10();
    if decades < 2.0 - 1e-9 || rows.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "smoothing fit needs two decades of time, got {decades:.2} over {} samples",
            rows.len()
        )));
    }
    let lt: Vec<f64> = rows.iter().map(|r| r.t.ln()).collect();
    let ls: Vec<f64> = rows.iter().map(|r| r.sup.ln()).collect();
    let (slope, _) = linear_fit(&lt, &ls);
    let alpha = exponents.alpha;
    let k_hat = rows
        .iter()
        .map(|r| r.sup * r.t.powf(alpha) * mass.powf(-exponents.beta))
        .fold(0.0, f64::max);
    Ok(SmoothingFit {
        alpha,
        alpha_hat: -slope,
        k_hat,
        decades,
        samples: rows.len(),
    })
}

fn positive_part_mass(a: &Field, b: &Field, rho: &Field) -> Result<f64> {
    a.ensure_same_grid(b)?;
    a.ensure_same_grid(rho)?;
    let hd = a.grid().cell_volume();
    Ok(a.values()
        .iter()
        .zip(b.values())
        .zip(rho.values())
        .map(|((x, y), r)| (x - y).max(0.0) * r)
        .sum::<f64>()
        * hd)
}

/// `‖(u₁(t) - u₂(t))₊‖_{1,ρ} - ‖(u₀₁ - u₀₂)₊‖_{1,ρ}`; nonpositive for a contraction.
pub fn contraction_check(u1: &Field, u2: &Field, u01: &Field, u02: &Field, rho: &Field) -> Result<f64> {
    Ok(positive_part_mass(u1, u2, rho)? - positive_part_mass(u01, u02, rho)?)
}

/// `max_i (lo_i - hi_i)`; nonpositive when `lo ≤ hi` nodewise.
pub fn order_violation(lo: &Field, hi: &Field) -> Result<f64> {
    lo.ensure_same_grid(hi)?;
    Ok(lo
        .values()
        .iter()
        .zip(hi.values())
        .map(|(a, b)| a - b)
        .fold(f64::NEG_INFINITY, f64::max))
}

/// Accumulates `U(t₀; x, t) = ∫_{t₀}^t u^m dτ` by the trapezoidal rule over steps.
#[derive(Debug, Clone)]
pub struct FluxPotential {
    t0: f64,
    t: f64,
    u_acc: Field,
}

impl FluxPotential {
    pub fn new(t0: f64, grid: crate::grid::Grid) -> Self {
        Self {
            t0,
            t: t0,
            u_acc: Field::zeros(grid),
        }
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn potential(&self) -> &Field {
        &self.u_acc
    }
}

impl Observer for FluxPotential {
    fn on_step(&mut self, prev: &Field, state: &EvolutionState, dt: f64) -> Result<()> {
        let start = state.t() - dt;
        if start < self.t0 * (1.0 - 1e-12) - 1e-300 {
            return Ok(());
        }
        let m = state.m();
        for ((acc, &a), &b) in self
            .u_acc
            .values_mut()
            .iter_mut()
            .zip(prev.values())
            .zip(state.u().values())
        {
            *acc += 0.5 * dt * (signed_power(a, m) + signed_power(b, m));
        }
        self.t = state.t();
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FluxReport {
    pub t0: f64,
    pub t: f64,
    /// Smallest `C` with `U ≤ C (I_{2s} * ρ)` nodewise.
    pub c_min: f64,
    pub slope: f64,
    pub expected_slope: f64,
    pub window: [f64; 2],
}

/// Compares the flux potential with the Riesz potential of the weight and
/// fits its decay on `r_lo ≤ |x| ≤ r_hi`.
pub fn flux_potential_check(flux: &FluxPotential, model: &DensityModel, window: [f64; 2]) -> Result<FluxReport> {
    let p = model.params();
    if !p.is_fast() {
        return Err(Error::Regime(format!(
            "flux-potential bound requires γ > 2s: got γ={}, s={}",
            p.gamma, p.s
        )));
    }
    let grid = *model.grid();
    let potential = RieszOperator::new(grid, p.s)?.apply(model.rho())?;
    let u = flux.potential();
    let c_min = u
        .values()
        .iter()
        .zip(potential.values())
        .map(|(a, b)| a / b)
        .fold(0.0, f64::max);
    let (lx, ly): (Vec<f64>, Vec<f64>) = (0..grid.len())
        .filter_map(|k| {
            let r = grid.radius(k);
            let v = u.values()[k];
            (r >= window[0] && r <= window[1] && v > 0.0).then(|| ((1.0 + r).ln(), v.ln()))
        })
        .unzip();
    if lx.len() < 4 {
        return Err(Error::InsufficientData(
            "too few nodes in the flux-potential fit window".into(),
        ));
    }
    let (slope, _) = linear_fit(&lx, &ly);
    let d = p.d as f64;
    let kappa = if p.gamma < d {
        p.gamma - 2.0 * p.s
    } else {
        d - 2.0 * p.s
    };
    Ok(FluxReport {
        t0: flux.t0,
        t: flux.t,
        c_min,
        slope,
        expected_slope: -kappa,
        window,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeDerivativeReport {
    /// Largest ratio of `‖Δu/δ‖_{1,ρ}` to the time-averaged bound `2M/((m-1)t)`.
    pub l1_ratio: f64,
    /// Smallest nodewise increment of `v = t^{1/(m-1)} u` between logged times,
    /// relative to `‖v‖_∞`.
    pub v_increment: f64,
    pub pairs: usize,
}

impl TimeDerivativeReport {
    pub fn l1_bound_holds(&self, tol: f64) -> bool {
        self.l1_ratio <= 1.0 + tol
    }

    pub fn benilan_crandall_holds(&self, tol: f64) -> bool {
        self.v_increment >= -tol
    }
}

/// Checks the `L¹_ρ` bound on `u_t` and the Bénilan–Crandall lower bound in
/// their time-integrated forms between successive snapshots with `t ≥ t_min`.
pub fn time_derivative_check(
    snapshots: &SnapshotLog,
    rho: &Field,
    m: f64,
    mass: f64,
    t_min: f64,
) -> Result<TimeDerivativeReport> {
    let hd = rho.grid().cell_volume();
    let q = 1.0 / (m - 1.0);
    let mut report = TimeDerivativeReport {
        l1_ratio: 0.0,
        v_increment: f64::INFINITY,
        pairs: 0,
    };
    let idx: Vec<usize> = (0..snapshots.times.len())
        .filter(|&k| snapshots.times[k] >= t_min)
        .collect();
    for w in idx.windows(2) {
        let (t1, t2) = (snapshots.times[w[0]], snapshots.times[w[1]]);
        let (u1, u2) = (&snapshots.fields[w[0]], &snapshots.fields[w[1]]);
        u1.ensure_same_grid(u2)?;
        let diff: f64 = u1
            .values()
            .iter()
            .zip(u2.values())
            .zip(rho.values())
            .map(|((a, b), r)| (b - a).abs() * r)
            .sum::<f64>()
            * hd;
        let bound = 2.0 * mass * q * (t2 / t1).ln();
        if bound > 0.0 {
            report.l1_ratio = report.l1_ratio.max(diff / bound);
        } else if diff > 0.0 {
            report.l1_ratio = f64::INFINITY;
        }
        let (s1, s2) = (t1.powf(q), t2.powf(q));
        let scale = u2.sup_norm() * s2;
        if scale > 0.0 {
            let worst = u1
                .values()
                .iter()
                .zip(u2.values())
                .map(|(a, b)| s2 * b - s1 * a)
                .fold(f64::INFINITY, f64::min);
            report.v_increment = report.v_increment.min(worst / scale);
        }
        report.pairs += 1;
    }
    if report.pairs == 0 {
        return Err(Error::InsufficientData(format!("no snapshot pairs after t={t_min}")));
    }
    if !report.v_increment.is_finite() {
        report.v_increment = 0.0;
    }
    Ok(report)
}

/// Largest fixed explicit step under which a checkerboard perturbation does
/// not grow in `L¹_ρ` over `steps` steps of the scheme linearized about `u`, found by
/// bisection in `log dt`.
pub fn stability_probe(state: &EvolutionState, steps: usize) -> f64 {
    let m = state.m();
    let coef: Vec<f64> = state.u().values().iter().map(|&v| m * v.abs().powf(m - 1.0)).collect();
    let rho = state.rho().values();
    let checker: Vec<f64> = (0..coef.len()).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
    let start: f64 = rho.iter().sum();
    let stable = |dt: f64| {
        let mut d = checker.clone();
        for _ in 0..steps {
            let src: Vec<f64> = d.iter().zip(&coef).map(|(a, c)| a * c).collect();
            let ad = state.operator().apply_values(&src);
            for ((v, a), r) in d.iter_mut().zip(&ad).zip(rho) {
                *v -= dt * a / r;
            }
        }
        d.iter().zip(rho).map(|(v, r)| v.abs() * r).sum::<f64>() <= start
    };
    let cfl = state.cfl_dt();
    let (mut lo, mut hi) = (cfl / 64.0, cfl * 64.0);
    for _ in 0..30 {
        let mid = (lo * hi).sqrt();
        if stable(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}
