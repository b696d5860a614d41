//! Weights `ρ(x)` in the slowly and fast decaying regimes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Field, Grid};

/// Scalar parameters of the weighted problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Nonlinearity exponent, `m > 1`.
    pub m: f64,
    /// Fractional order, `s ∈ (0, 1)`.
    pub s: f64,
    pub d: usize,
    /// Far-field decay exponent of the weight.
    pub gamma: f64,
    /// Near-origin exponent; the realized weights are bounded, so this is 0.
    pub gamma0: f64,
    /// Far-field constant: `ρ(x)|x|^γ → c_∞`.
    pub c_inf: f64,
    /// Upper envelope constant of the fast regime, `ρ ≤ C₀|x|^{-γ}` off the unit ball.
    pub c0: f64,
    /// Two-sided envelope constants of the slow regime.
    pub c_lower: f64,
    pub c_upper: f64,
    /// Weighted mass of the initial datum.
    pub mass: f64,
    /// Regularization length of the weight near the origin.
    pub eps_reg: f64,
}

impl ModelParams {
    /// Parameters with envelope constants derived from the regularized weight.
    pub fn new(m: f64, s: f64, d: usize, gamma: f64, c_inf: f64, mass: f64, eps_reg: f64) -> Self {
        let mut p = Self {
            m,
            s,
            d,
            gamma,
            gamma0: 0.0,
            c_inf,
            c0: c_inf,
            c_lower: 0.0,
            c_upper: 0.0,
            mass,
            eps_reg,
        };
        p.set_natural_envelope();
        p
    }

    /// Tightest two-sided constants for `c_∞ (ε² + |x|²)^{-γ/2}`: on the unit
    /// ball against 1, off it against `|x|^{-γ}`.
    pub fn set_natural_envelope(&mut self) {
        let e2 = self.eps_reg * self.eps_reg;
        self.c_lower = self.c_inf * (1.0 + e2).powf(-0.5 * self.gamma);
        self.c_upper = self.c_inf * self.eps_reg.min(1.0).powf(-self.gamma);
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if !(self.m > 1.0) {
            return bad(format!("m must exceed 1, got m={}", self.m));
        }
        if !(self.s > 0.0 && self.s < 1.0) {
            return Err(Error::InvalidOrder(self.s));
        }
        if self.d != 1 && self.d != 2 {
            return bad(format!("d must be 1 or 2, got d={}", self.d));
        }
        if !(self.d as f64 > 2.0 * self.s) {
            return Err(Error::Regime(format!(
                "d > 2s is required: got d={}, s={}",
                self.d, self.s
            )));
        }
        if !(self.gamma >= 0.0) {
            return bad(format!("γ must be nonnegative, got γ={}", self.gamma));
        }
        if !(self.gamma0 >= 0.0 && self.gamma0 <= self.gamma) {
            return bad(format!("γ₀ must lie in [0, γ], got γ₀={}", self.gamma0));
        }
        for (name, v) in [
            ("c_inf", self.c_inf),
            ("C0", self.c0),
            ("mass", self.mass),
            ("eps_reg", self.eps_reg),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("{name} must be positive, got {v}"));
            }
        }
        if !(self.c_lower > 0.0 && self.c_lower <= self.c_upper) {
            return bad(format!(
                "envelope constants need 0 < c <= C, got c={}, C={}",
                self.c_lower, self.c_upper
            ));
        }
        Ok(())
    }

    pub fn is_slow(&self) -> bool {
        self.gamma < 2.0 * self.s && self.gamma <= self.d as f64 - 2.0 * self.s
    }

    pub fn is_fast(&self) -> bool {
        self.gamma > 2.0 * self.s
    }

    /// Hypotheses under which the parabolic problem has a unique local strong solution.
    pub fn is_parabolic_uniqueness_grade(&self) -> bool {
        let d = self.d as f64;
        let s = self.s;
        d > 4.0 * s && self.gamma > 2.0 * s && self.gamma <= d - 2.0 * s && self.gamma > 4.0 * s
    }

    /// Hypotheses under which the minimal elliptic solution is the only one.
    pub fn is_elliptic_uniqueness_grade(&self) -> bool {
        self.d as f64 > 4.0 * self.s && self.gamma > 4.0 * self.s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DensityKind {
    Slow,
    Fast,
    PurePower,
}

impl DensityKind {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "slow" => Ok(Self::Slow),
            "fast" => Ok(Self::Fast),
            "pure-power" => Ok(Self::PurePower),
            other => Err(Error::InvalidParameter(format!(
                "unknown density kind `{other}` (known: slow, fast, pure-power)"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Slow => "slow",
            Self::Fast => "fast",
            Self::PurePower => "pure-power",
        }
    }
}

/// A realized weight `ρ(x) = c_∞ (ε² + |x|²)^{-γ/2}` on a grid.
#[derive(Debug, Clone)]
pub struct DensityModel {
    kind: DensityKind,
    params: ModelParams,
    rho: Field,
}

/// Closed form of the regularized weight.
pub fn regularized_power(c_inf: f64, gamma: f64, eps: f64, r: f64) -> f64 {
    c_inf * (eps * eps + r * r).powf(-0.5 * gamma)
}

/// Average of `|x|^{-γ}` over the cell around the origin node.
pub fn origin_cell_average(grid: &Grid, gamma: f64) -> f64 {
    crate::operators::constants::cell_integral(grid.dim(), grid.spacing(), gamma) / grid.cell_volume()
}

pub fn make_density(kind: DensityKind, params: ModelParams, grid: Grid) -> Result<DensityModel> {
    params.validate()?;
    if grid.dim() != params.d {
        return Err(Error::InvalidParameter(format!(
            "grid dimension {} does not match d={}",
            grid.dim(),
            params.d
        )));
    }
    let (g, s) = (params.gamma, params.s);
    match kind {
        DensityKind::Slow | DensityKind::PurePower if !params.is_slow() => {
            return Err(Error::Regime(format!(
                "{} weight requires γ < 2s and γ <= d - 2s: got γ={g}, s={s}, d={}",
                kind.name(),
                params.d
            )));
        }
        DensityKind::Fast if !params.is_fast() => {
            return Err(Error::Regime(format!("fast weight requires γ > 2s: got γ={g}, s={s}")));
        }
        DensityKind::PurePower if params.eps_reg > 0.01 * grid.spacing() => {
            return Err(Error::InvalidParameter(format!(
                "pure-power weight needs ε_reg << h: got ε_reg={}, h={}",
                params.eps_reg,
                grid.spacing()
            )));
        }
        _ => {}
    }
    let mut rho = Field::radial(grid, |r| regularized_power(params.c_inf, g, params.eps_reg, r));
    if kind == DensityKind::PurePower {
        // Lumped origin cell; the point value ε^{-γ} would overweight it.
        let o = grid.origin_node();
        rho.values_mut()[o] = params.c_inf * origin_cell_average(&grid, g);
    }
    Ok(DensityModel { kind, params, rho })
}

/// Measured envelope constants of a realized weight.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeReport {
    /// `min ρ(x) |x|^γ` (slow and pure-power kinds).
    pub lower: Option<f64>,
    /// `max ρ(x) |x|^γ`.
    pub upper: f64,
    pub ratio: Option<f64>,
    pub pass: bool,
}

impl DensityModel {
    pub fn kind(&self) -> DensityKind {
        self.kind
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn rho(&self) -> &Field {
        &self.rho
    }

    pub fn grid(&self) -> &Grid {
        self.rho.grid()
    }

    /// Analytic weight at radius `r`.
    pub fn eval(&self, r: f64) -> f64 {
        regularized_power(self.params.c_inf, self.params.gamma, self.params.eps_reg, r)
    }

    /// Reference envelope `|x|^{-γ}` off the unit ball and `|x|^{-γ₀}` inside.
    fn envelope(&self, r: f64) -> f64 {
        if r >= 1.0 {
            r.powf(-self.params.gamma)
        } else {
            r.powf(-self.params.gamma0)
        }
    }

    pub fn verify_envelope(&self) -> EnvelopeReport {
        let grid = *self.grid();
        let p = &self.params;
        let ratios = (0..grid.len()).filter_map(|k| {
            let r = grid.radius(k);
            match self.kind {
                DensityKind::PurePower if r == 0.0 => None,
                DensityKind::PurePower => Some(self.rho.values()[k] * r.powf(p.gamma)),
                DensityKind::Fast if r < 1.0 => None,
                _ => Some(self.rho.values()[k] / self.envelope(r)),
            }
        });
        let (lo, hi) = ratios.fold((f64::INFINITY, 0.0_f64), |(lo, hi), v| (lo.min(v), hi.max(v)));
        let tol = 1e-12;
        match self.kind {
            DensityKind::Fast => EnvelopeReport {
                lower: None,
                upper: hi,
                ratio: None,
                pass: hi <= p.c0 * (1.0 + tol),
            },
            _ => EnvelopeReport {
                lower: Some(lo),
                upper: hi,
                ratio: Some(hi / lo),
                pass: lo >= p.c_lower * (1.0 - tol) && hi <= p.c_upper * (1.0 + tol),
            },
        }
    }

    /// `ρ_λ(x) = λ^{κγ} ρ(λ^κ x)`, evaluated from the closed form.
    pub fn rescale(&self, lambda: f64, kappa: f64) -> Field {
        let scale = lambda.powf(kappa);
        let amp = lambda.powf(kappa * self.params.gamma);
        Field::radial(*self.grid(), |r| amp * self.eval(scale * r))
    }

    /// Same kind and grid with different parameters.
    pub fn with_params(&self, params: ModelParams) -> Result<DensityModel> {
        make_density(self.kind, params, *self.grid())
    }

    /// Same weight shape realized on another grid.
    pub fn on_grid(&self, grid: Grid) -> Result<DensityModel> {
        make_density(self.kind, self.params, grid)
    }
}

pub fn verify_envelope(model: &DensityModel) -> EnvelopeReport {
    model.verify_envelope()
}

pub fn rescale_density(model: &DensityModel, lambda: f64, kappa: f64) -> Field {
    model.rescale(lambda, kappa)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> Grid {
        Grid::new(1, 256, 16.0).unwrap()
    }

    #[test]
    fn flat_weight() {
        let p = ModelParams::new(2.0, 0.25, 1, 0.0, 1.0, 1.0, 1.0);
        let model = make_density(DensityKind::Slow, p, grid()).unwrap();
        assert!(model.rho().values().iter().all(|&v| v == 1.0));
        let rep = model.verify_envelope();
        assert_eq!(rep.lower, Some(1.0));
        assert_eq!(rep.upper, 1.0);
        assert!(rep.pass);
    }

    #[test]
    fn fast_weight_values() {
        let p = ModelParams::new(2.0, 0.2, 1, 0.9, 1.0, 1.0, 1.0);
        let g = Grid::new(1, 64, 8.0).unwrap();
        let model = make_density(DensityKind::Fast, p, g).unwrap();
        assert_eq!(model.rho().values()[g.origin_node()], 1.0);
        // (1 + 9)^{-0.45}
        let at3 = model.rho().values()[g.origin_node() + 12];
        assert!((at3 - 0.354_813_389_2).abs() < 1e-9, "{at3}");
        assert!(model.verify_envelope().pass);
    }

    #[test]
    fn regime_mismatch_is_rejected() {
        let slow_bad = ModelParams::new(2.0, 0.25, 1, 0.6, 1.0, 1.0, 1.0);
        assert!(matches!(
            make_density(DensityKind::Slow, slow_bad, grid()),
            Err(Error::Regime(_))
        ));
        let fast_bad = ModelParams::new(2.0, 0.2, 1, 0.3, 1.0, 1.0, 1.0);
        assert!(matches!(
            make_density(DensityKind::Fast, fast_bad, grid()),
            Err(Error::Regime(_))
        ));
        let coarse_reg = ModelParams::new(2.0, 0.25, 1, 0.25, 1.0, 1.0, 0.5);
        assert!(make_density(DensityKind::PurePower, coarse_reg, grid()).is_err());
    }

    #[test]
    fn pure_power_envelope_is_tight() {
        let g = grid();
        let p = ModelParams::new(2.0, 0.25, 1, 0.25, 1.0, 1.0, 1e-4 * g.spacing());
        let model = make_density(DensityKind::PurePower, p, g).unwrap();
        let rep = model.verify_envelope();
        assert!(rep.ratio.unwrap() <= 1.0 + 1e-6, "{rep:?}");
    }

    #[test]
    fn rescaling_identity_and_pure_power_invariance() {
        let g = grid();
        let p = ModelParams::new(2.0, 0.25, 1, 0.25, 1.0, 1.0, 1.0);
        let model = make_density(DensityKind::Slow, p, g).unwrap();
        assert_eq!(&model.rescale(1.0, 1.0), model.rho());

        let p = ModelParams::new(2.0, 0.25, 1, 0.25, 1.0, 1.0, 1e-12);
        let pure = make_density(DensityKind::PurePower, p, g).unwrap();
        let o = g.origin_node();
        for lambda in [0.5, 3.0, 40.0] {
            let r = pure.rescale(lambda, 1.0);
            for k in (0..g.len()).filter(|&k| k != o) {
                let rel = (r.values()[k] / pure.rho().values()[k] - 1.0).abs();
                assert!(rel < 1e-12, "λ={lambda} k={k} rel={rel}");
            }
        }
    }
}
