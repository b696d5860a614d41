//! Minimal solution of the sublinear problem `(-Δ)^s w = ρ w^α` by monotone
//! Picard iteration on `w = G(ρ w^α)`.
//!
//! `G` is the whole-space Riesz potential of a source supported in the box
//! (`riesz`, the default), or the inverse of the exterior-zero quadrature
//! matrix used by the time stepper (`exterior-zero`).

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::density::DensityModel;
use crate::error::{Error, Result};
use crate::grid::{Field, Grid};
use crate::operators::{frac_laplacian_constant, riesz_constant, QuadratureOperator, RieszOperator};
use crate::pme::linear_fit;

/// Iterates may overshoot monotonicity by this much relative to `sup w` (transform round-off).
const MONOTONE_SLACK: f64 = 1e-12;

pub const DEFAULT_MAX_ITERATIONS: usize = 1000;

/// A positive linear inverse of `(-Δ)^s` on the grid.
pub trait GreenOperator: Send + Sync + std::fmt::Debug {
    fn name(&self) -> &'static str;
    fn apply(&self, f: &[f64]) -> Result<Vec<f64>>;
}

impl GreenOperator for RieszOperator {
    fn name(&self) -> &'static str {
        "riesz"
    }

    fn apply(&self, f: &[f64]) -> Result<Vec<f64>> {
        Ok(self.apply_values(f))
    }
}

/// Relative residual of the linear solves behind the exterior-zero kernel.
const SOLVE_RTOL: f64 = 1e-13;

#[derive(Debug)]
struct ExteriorZeroGreen(QuadratureOperator);

impl GreenOperator for ExteriorZeroGreen {
    fn name(&self) -> &'static str {
        "exterior-zero"
    }

    fn apply(&self, f: &[f64]) -> Result<Vec<f64>> {
        self.0.solve(f, SOLVE_RTOL)
    }
}

type GreenCtor = fn(Grid, f64) -> Result<Arc<dyn GreenOperator>>;

const GREEN_KERNELS: &[(&str, GreenCtor)] = &[
    ("riesz", |g, s| Ok(Arc::new(RieszOperator::new(g, s)?))),
    ("exterior-zero", |g, s| {
        Ok(Arc::new(ExteriorZeroGreen(QuadratureOperator::new(g, s)?)))
    }),
];

pub fn green_kernel_names() -> impl Iterator<Item = &'static str> {
    GREEN_KERNELS.iter().map(|(name, _)| *name)
}

pub fn green_kernel(name: &str, grid: Grid, s: f64) -> Result<Arc<dyn GreenOperator>> {
    GREEN_KERNELS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, ctor)| ctor(grid, s))
        .unwrap_or_else(|| {
            Err(Error::InvalidParameter(format!(
                "unknown Green kernel `{name}` (known: {})",
                green_kernel_names().collect::<Vec<_>>().join(", ")
            )))
        })
}

#[derive(Debug, Clone)]
pub struct EllipticProblem {
    model: DensityModel,
    alpha: f64,
    green: Arc<dyn GreenOperator>,
    /// `G ρ`.
    potential: Field,
    c_hat: f64,
    c_bar: f64,
}

impl EllipticProblem {
    /// Riesz-kernel problem with `C̄ = Ĉ^{α/(1-α)}`, the smallest admissible seed constant.
    pub fn new(model: DensityModel, alpha: f64) -> Result<Self> {
        Self::with_kernel(model, alpha, "riesz")
    }

    pub fn with_kernel(model: DensityModel, alpha: f64, kernel: &str) -> Result<Self> {
        let p = model.params();
        if !p.is_fast() {
            return Err(Error::Regime(format!(
                "the elliptic problem requires γ > 2s: got γ={}, s={}",
                p.gamma, p.s
            )));
        }
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::InvalidParameter(format!("α must lie in (0, 1), got α={alpha}")));
        }
        let green = green_kernel(kernel, *model.grid(), p.s)?;
        let potential = Field::new(*model.grid(), green.apply(model.rho().values())?)?;
        let c_hat = potential.sup_norm();
        if !c_hat.is_finite() || c_hat <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "Riesz potential of ρ is degenerate: Ĉ={c_hat}"
            )));
        }
        let c_bar = c_hat.powf(alpha / (1.0 - alpha));
        Ok(Self {
            model,
            alpha,
            green,
            potential,
            c_hat,
            c_bar,
        })
    }

    pub fn with_c_bar(mut self, c_bar: f64) -> Result<Self> {
        let least = self.c_hat.powf(self.alpha / (1.0 - self.alpha));
        if !(c_bar >= least * (1.0 - 1e-12)) {
            return Err(Error::InvalidParameter(format!(
                "C̄ must be at least Ĉ^(α/(1-α)) = {least}, got {c_bar}"
            )));
        }
        self.c_bar = c_bar;
        Ok(self)
    }

    /// Same problem with `ρ` replaced by `λρ`.
    pub fn scaled_weight(&self, lambda: f64) -> Result<Self> {
        let mut params = *self.model.params();
        params.c_inf *= lambda;
        params.c0 *= lambda;
        params.set_natural_envelope();
        let model = self.model.with_params(params)?;
        Self::with_kernel(model, self.alpha, self.green.name())
    }

    pub fn model(&self) -> &DensityModel {
        &self.model
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn kernel_name(&self) -> &'static str {
        self.green.name()
    }

    pub fn potential(&self) -> &Field {
        &self.potential
    }

    pub fn c_hat(&self) -> f64 {
        self.c_hat
    }

    pub fn c_bar(&self) -> f64 {
        self.c_bar
    }

    /// `T(w) = G(ρ w^α)`.
    pub fn picard_map(&self, w: &Field) -> Result<Field> {
        w.ensure_same_grid(&self.potential)?;
        if let Some((node, &value)) = w.values().iter().enumerate().find(|(_, v)| !(**v >= 0.0)) {
            return Err(Error::NegativeValue {
                node,
                value,
                sup: w.sup_norm(),
            });
        }
        let src: Vec<f64> = w
            .values()
            .iter()
            .zip(self.model.rho().values())
            .map(|(&v, &r)| r * v.powf(self.alpha))
            .collect();
        Field::new(*w.grid(), self.green.apply(&src)?)
    }

    /// `max_i w_i / (G ρ)_i`, the smallest constant in `w ≤ C (G ρ)`.
    pub fn potential_bound(&self, w: &Field) -> f64 {
        w.values()
            .iter()
            .zip(self.potential.values())
            .map(|(a, b)| a / b)
            .fold(0.0, f64::max)
    }

    /// Whether `γ > 2s + (d-2s)/(α+2)`, where the solution has finite energy.
    pub fn energy_regime(&self) -> bool {
        let p = self.model.params();
        let d = p.d as f64;
        p.gamma > 2.0 * p.s + (d - 2.0 * p.s) / (self.alpha + 2.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Branch {
    FromAbove,
    FromBelow,
}

#[derive(Debug, Clone)]
pub struct EllipticSolution {
    pub w: Field,
    pub iterations: usize,
    /// Relative sup-norm increments `‖w_{k+1} - w_k‖_∞ / ‖w_k‖_∞`.
    pub residuals: Vec<f64>,
    pub branch: Branch,
    /// Every iterate, when requested.
    pub iterates: Vec<Field>,
}

impl EllipticSolution {
    pub fn final_residual(&self) -> f64 {
        self.residuals.last().copied().unwrap_or(0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationControl {
    pub tol: f64,
    pub max_iterations: usize,
    pub keep_iterates: bool,
}

impl IterationControl {
    pub fn new(tol: f64) -> Self {
        Self {
            tol,
            max_iterations: DEFAULT_MAX_ITERATIONS,
            keep_iterates: false,
        }
    }
}

fn iterate(problem: &EllipticProblem, w0: Field, ctl: IterationControl, branch: Branch) -> Result<EllipticSolution> {
    if !(ctl.tol > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "tolerance must be positive, got {}",
            ctl.tol
        )));
    }
    let mut w = w0;
    let mut residuals = Vec::new();
    let mut iterates = Vec::new();
    if ctl.keep_iterates {
        iterates.push(w.clone());
    }
    for k in 1..=ctl.max_iterations {
        let next = problem.picard_map(&w)?;
        let sup = w.sup_norm();
        let slack = MONOTONE_SLACK * sup.max(next.sup_norm());
        let bad = next.values().iter().zip(w.values()).position(|(a, b)| match branch {
            Branch::FromAbove => *a > b + slack,
            Branch::FromBelow => *a < b - slack,
        });
        if let Some(node) = bad {
            return Err(Error::NonMonotoneIterate { node, iteration: k });
        }
        let inc = next
            .values()
            .iter()
            .zip(w.values())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        residuals.push(inc / sup);
        w = next;
        if ctl.keep_iterates {
            iterates.push(w.clone());
        }
        if inc <= ctl.tol * sup {
            return Ok(EllipticSolution {
                w,
                iterations: k,
                residuals,
                branch,
                iterates,
            });
        }
    }
    Err(Error::IterationCap(ctl.max_iterations))
}

/// Decreasing iteration from the supersolution `C̄ (G ρ)`.
pub fn solve_from_above(problem: &EllipticProblem, ctl: IterationControl) -> Result<EllipticSolution> {
    let w0 = problem.potential.scaled(problem.c_bar);
    iterate(problem, w0, ctl, Branch::FromAbove)
}

/// Increasing iteration from `seed_scale (G ρ)`; the default seed is `10⁻⁶ C̄`.
pub fn solve_from_below(
    problem: &EllipticProblem,
    ctl: IterationControl,
    seed_scale: Option<f64>,
) -> Result<EllipticSolution> {
    let mut scale = seed_scale.unwrap_or(1e-6 * problem.c_bar);
    for attempt in 0..2 {
        let w0 = problem.potential.scaled(scale);
        let image = problem.picard_map(&w0)?;
        let below = image.values().iter().zip(w0.values()).all(|(a, b)| a >= b);
        if below {
            return iterate(problem, w0, ctl, Branch::FromBelow);
        }
        if attempt == 0 {
            scale *= 1e-6;
        }
    }
    Err(Error::InvalidParameter(format!(
        "seed {scale:e}·(I*ρ) is not below its image even after shrinking"
    )))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub kappa_hat: f64,
    pub prefactor: f64,
    /// Decay rate of the Riesz potential of the weight, when the case is asserted.
    pub expected: Option<f64>,
    pub window: [f64; 2],
    pub samples: usize,
}

impl DecayFit {
    pub fn relative_error(&self) -> Option<f64> {
        self.expected.map(|k| (self.kappa_hat - k).abs() / k)
    }
}

/// Decay rate of the Riesz potential of `c|x|^{-γ}` at infinity:
/// `γ - 2s` for `γ < d`, `d - 2s` for `γ > d`, not asserted at `γ = d`.
pub fn riesz_decay_rate(d: usize, s: f64, gamma: f64) -> Option<f64> {
    let d = d as f64;
    if (gamma - d).abs() < 1e-12 {
        None
    } else if gamma < d {
        Some(gamma - 2.0 * s)
    } else {
        Some(d - 2.0 * s)
    }
}

/// Log-log fit of `f` against `1 + |x|` over `window[0] ≤ |x| ≤ window[1]`.
pub fn decay_fit(f: &Field, problem: &EllipticProblem, window: [f64; 2]) -> Result<DecayFit> {
    let grid = f.grid();
    let (lx, ly): (Vec<f64>, Vec<f64>) = (0..grid.len())
        .filter_map(|k| {
            let r = grid.radius(k);
            let v = f.values()[k];
            (r >= window[0] && r <= window[1] && v > 0.0).then(|| ((1.0 + r).ln(), v.ln()))
        })
        .unzip();
    if lx.len() < 8 || (1.0 + window[1]) / (1.0 + window[0]) < 1.25 {
        return Err(Error::InsufficientData(format!(
            "decay fit window [{}, {}] holds {} nodes",
            window[0],
            window[1],
            lx.len()
        )));
    }
    let (slope, intercept) = linear_fit(&lx, &ly);
    let p = problem.model().params();
    Ok(DecayFit {
        kappa_hat: -slope,
        prefactor: intercept.exp(),
        expected: riesz_decay_rate(p.d, p.s, p.gamma),
        window,
        samples: lx.len(),
    })
}

/// Smooth bump `exp(1 - 1/(1 - |x-c|²/a²))` supported in the ball of radius `a`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestBump {
    pub center: [f64; 2],
    pub radius: f64,
}

impl TestBump {
    pub fn eval(&self, x: [f64; 2], dim: usize) -> f64 {
        let dy = if dim == 2 { x[1] - self.center[1] } else { 0.0 };
        let q = ((x[0] - self.center[0]).powi(2) + dy * dy) / (self.radius * self.radius);
        if q < 1.0 {
            (1.0 - 1.0 / (1.0 - q)).exp()
        } else {
            0.0
        }
    }
}

/// Bumps at several centres and widths inside the inner half of the box.
pub fn default_test_bank(half_extent: f64) -> Vec<TestBump> {
    let a = 0.5 * half_extent;
    [(0.0, 0.25), (0.0, 0.5), (0.3, 0.2), (-0.4, 0.35), (0.6, 0.15)]
        .iter()
        .map(|&(c, r)| TestBump {
            center: [c * a, 0.0],
            radius: r * a,
        })
        .collect()
}

/// `max_φ |∫ w (-Δ)^s φ - Σ ρ w^α φ h^d| / Σ ρ w^α φ h^d`.
///
/// For the Riesz kernel `w` is the potential of a source supported in the
/// box, so it is known outside the box too; in 1-D the exterior part of the
/// pairing is added by quadrature, in 2-D the pairing is restricted to the
/// box. For the exterior-zero kernel `w` vanishes outside the box.
pub fn very_weak_residual(w: &Field, problem: &EllipticProblem, bank: &[TestBump]) -> Result<f64> {
    let grid = *w.grid();
    let s = problem.model().params().s;
    let op = QuadratureOperator::new(grid, s)?;
    let rho = problem.model().rho();
    let source: Vec<f64> = w
        .values()
        .iter()
        .zip(rho.values())
        .map(|(&v, &r)| r * v.powf(problem.alpha))
        .collect();
    let mut worst = 0.0f64;
    for bump in bank {
        let phi = Field::from_fn(grid, |x| bump.eval(x, grid.dim()));
        let lap = op.apply_values(phi.values());
        let mut lhs: f64 = w.values().iter().zip(&lap).map(|(a, b)| a * b).sum();
        if grid.dim() == 1 && problem.kernel_name() == "riesz" {
            lhs += exterior_pairing(&grid, s, &source, phi.values()) / grid.spacing();
        }
        let rhs: f64 = w
            .values()
            .iter()
            .zip(rho.values())
            .zip(phi.values())
            .map(|((v, r), p)| r * v.powf(problem.alpha) * p)
            .sum();
        if rhs > 0.0 {
            worst = worst.max((lhs - rhs).abs() / rhs);
        } else if lhs != 0.0 {
            worst = f64::INFINITY;
        }
    }
    Ok(worst)
}

/// `∫_{exterior} (I_{2s} * f)(y) (-Δ)^s φ(y) dy` on a 1-D grid, with `f` and
/// `φ` given by their nodal values and supported in the box.
fn exterior_pairing(grid: &Grid, s: f64, f: &[f64], phi: &[f64]) -> f64 {
    let h = grid.spacing();
    let q = 1.0 - 2.0 * s;
    let k = riesz_constant(1, s);
    let c = frac_laplacian_constant(1, s);
    let xs = grid.axis_coords();
    let potential = |y: f64| {
        k * xs
            .iter()
            .zip(f)
            .map(|(x, v)| {
                let r = (y - x).abs();
                v * ((r + 0.5 * h).powf(1.0 - q) - (r - 0.5 * h).powf(1.0 - q)) / (1.0 - q)
            })
            .sum::<f64>()
    };
    let lap = |y: f64| {
        -c * h
            * xs.iter()
                .zip(phi)
                .filter(|(_, p)| **p != 0.0)
                .map(|(x, p)| p / (y - x).abs().powf(1.0 + 2.0 * s))
                .sum::<f64>()
    };
    let hi = grid.half_extent() - 0.5 * h;
    let lo = grid.half_extent() + 0.5 * h;
    // y = b / u maps u ∈ (0, 1] onto [b, ∞); the integrand decays like y^{-2}
    // and tends to `far / b` at u = 0.
    let far = -k * c * h * h * f.iter().sum::<f64>() * phi.iter().sum::<f64>();
    let half_line = |b: f64, sign: f64| {
        crate::operators::constants::simpson(
            |u: f64| {
                if u <= 0.0 {
                    return far / b;
                }
                let y = sign * b / u;
                potential(y) * lap(y) * b / (u * u)
            },
            0.0,
            1.0,
            400,
        )
    };
    half_line(hi, 1.0) + half_line(lo, -1.0)
}
