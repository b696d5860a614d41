//! Discretizations of the fractional Laplacian and of the Riesz potential.
//!
//! Two interchangeable backends realize `(-Δ)^s`: a monotone quadrature
//! matrix with exterior-zero convention (used by the time stepper) and a
//! Fourier multiplier on the periodized box. They are selected by name
//! through [`laplacian_backend`] and validated against each other.

pub mod constants;
pub mod quadrature;
pub mod riesz;
pub mod spectral;
mod toeplitz;

pub use constants::{frac_laplacian_constant, riesz_constant};
pub use quadrature::QuadratureOperator;
pub use riesz::{riesz_potential, RieszOperator};
pub use spectral::SpectralOperator;

use crate::error::{Error, Result};
use crate::grid::{Field, Grid};

/// A discrete realization of `(-Δ)^s` on a fixed grid.
pub trait FractionalLaplacian: Send + Sync {
    fn name(&self) -> &'static str;
    fn grid(&self) -> &Grid;
    fn order(&self) -> f64;
    fn apply(&self, f: &Field) -> Result<Field>;
}

type BackendCtor = fn(Grid, f64) -> Result<Box<dyn FractionalLaplacian>>;

const BACKENDS: &[(&str, BackendCtor)] = &[
    ("quadrature", |g, s| Ok(Box::new(QuadratureOperator::new(g, s)?))),
    ("spectral", |g, s| Ok(Box::new(SpectralOperator::new(g, s)?))),
];

/// Names accepted by [`laplacian_backend`].
pub fn backend_names() -> impl Iterator<Item = &'static str> {
    BACKENDS.iter().map(|(name, _)| *name)
}

pub fn laplacian_backend(name: &str, grid: Grid, s: f64) -> Result<Box<dyn FractionalLaplacian>> {
    BACKENDS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, ctor)| ctor(grid, s))
        .unwrap_or_else(|| {
            Err(Error::InvalidParameter(format!(
                "unknown operator backend `{name}` (known: {})",
                backend_names().collect::<Vec<_>>().join(", ")
            )))
        })
}

pub(crate) fn check_order(s: f64) -> Result<()> {
    if s > 0.0 && s < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidOrder(s))
    }
}

/// `(-Δ)^s f` through the Fourier multiplier on the periodized box.
pub fn frac_laplacian_spectral(f: &Field, s: f64) -> Result<Field> {
    SpectralOperator::new(*f.grid(), s)?.apply(f)
}

/// Sup-norm of `I_{2s} * ((-Δ)^s g) - g` over the inner half of the box,
/// relative to `‖g‖_∞`; the fractional Laplacian is the quadrature backend.
pub fn check_inverse_identity(g: &Field, s: f64) -> Result<f64> {
    let lap = QuadratureOperator::new(*g.grid(), s)?.apply(g)?;
    let back = RieszOperator::new(*g.grid(), s)?.apply(&lap)?;
    let scale = g.sup_norm();
    if scale == 0.0 {
        return Ok(back.sup_norm());
    }
    let mask = g.grid().inner_mask(0.5);
    Ok(back.zip_map(g, |a, b| a - b)?.masked_sup(&mask) / scale)
}

/// Relative sup-norm gap between two backends on the inner half of the box.
pub fn cross_validate(a: &dyn FractionalLaplacian, b: &dyn FractionalLaplacian, f: &Field) -> Result<f64> {
    let fa = a.apply(f)?;
    let fb = b.apply(f)?;
    let mask = f.grid().inner_mask(0.5);
    let scale = fb.masked_sup(&mask);
    Ok(fa.zip_map(&fb, |x, y| x - y)?.masked_sup(&mask) / scale.max(f64::MIN_POSITIVE))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_resolves_known_names() {
        let g = Grid::new(1, 32, 4.0).unwrap();
        for name in backend_names() {
            let op = laplacian_backend(name, g, 0.3).unwrap();
            assert_eq!(op.name(), name);
            assert_eq!(op.order(), 0.3);
        }
        assert!(laplacian_backend("finite-element", g, 0.3).is_err());
    }

    #[test]
    fn inverse_identity_of_zero() {
        let g = Grid::new(1, 64, 8.0).unwrap();
        assert_eq!(check_inverse_identity(&Field::zeros(g), 0.25).unwrap(), 0.0);
    }
}
