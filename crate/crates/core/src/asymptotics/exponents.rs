use serde::{Deserialize, Serialize};

use crate::density::ModelParams;
use crate::error::{Error, Result};

/// Self-similar and smoothing exponents of the weighted flow.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingExponents {
    /// Amplitude exponent; shared by the self-similar scaling and the smoothing estimate.
    pub alpha: f64,
    /// Spatial exponent of the self-similar scaling.
    pub kappa: f64,
    /// Mass exponent of the smoothing estimate.
    pub beta: f64,
    /// `(m-1)^{-1/(m-1)}`.
    pub c_m: f64,
}

pub fn separable_constant(m: f64) -> f64 {
    (m - 1.0).powf(-1.0 / (m - 1.0))
}

pub fn scaling_exponents(params: &ModelParams) -> Result<ScalingExponents> {
    let d = params.d as f64;
    let (m, s, g) = (params.m, params.s, params.gamma);
    let denom = (m - 1.0) * (d - g) + 2.0 * s - g;
    if !(denom.abs() > 1e-12) {
        return Err(Error::Regime(format!(
            "self-similar exponents need (m-1)(d-γ) + 2s - γ ≠ 0: got m={m}, d={d}, s={s}, γ={g}"
        )));
    }
    let kappa = 1.0 / denom;
    Ok(ScalingExponents {
        alpha: (d - g) * kappa,
        kappa,
        beta: (2.0 * s - g) * kappa,
        c_m: separable_constant(m),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(m: f64, gamma: f64) -> ModelParams {
        ModelParams::new(m, 0.25, 1, gamma, 1.0, 1.0, 1.0)
    }

    #[test]
    fn unweighted_exponents() {
        let e = scaling_exponents(&params(2.0, 0.0)).unwrap();
        assert!((e.alpha - 2.0 / 3.0).abs() < 1e-15);
        assert!((e.kappa - 2.0 / 3.0).abs() < 1e-15);
        assert!((e.beta - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn weighted_exponents() {
        let e = scaling_exponents(&params(2.0, 0.25)).unwrap();
        assert!((e.kappa - 1.0).abs() < 1e-15);
        assert!((e.alpha - 0.75).abs() < 1e-15);
        assert!((e.beta - 0.25).abs() < 1e-15);
    }

    #[test]
    fn separable_constants() {
        assert_eq!(separable_constant(2.0), 1.0);
        assert!((separable_constant(3.0) - 0.5f64.sqrt()).abs() < 1e-15);
    }
}
