//! Lattice quadrature of the Riesz potential `I_{2s} * f`.

use crate::error::{Error, Result};
use crate::grid::{Field, Grid};

use super::check_order;
use super::constants::{cell_integral, riesz_constant, simpson};
use super::toeplitz::ToeplitzKernel;

/// `(I f)_i = k Σ_j f_j ∫_{cell j} |x_i - y|^{-(d-2s)} dy`, which reduces to
/// `k h^d f_j / |x_i - x_j|^{d-2s}` away from `x_i`. The field is zero
/// outside the box.
#[derive(Debug, Clone)]
pub struct RieszOperator {
    grid: Grid,
    s: f64,
    k_sd: f64,
    kernel: ToeplitzKernel,
}

impl RieszOperator {
    pub fn new(grid: Grid, s: f64) -> Result<Self> {
        check_order(s)?;
        let d = grid.dim();
        if (d as f64) <= 2.0 * s {
            return Err(Error::InvalidParameter(format!(
                "the Riesz kernel needs d > 2s, got d = {d}, s = {s}"
            )));
        }
        let h = grid.spacing();
        let hd = grid.cell_volume();
        let k_sd = riesz_constant(d, s);
        let q = d as f64 - 2.0 * s;
        let kernel = ToeplitzKernel::from_fn(d, grid.n_per_axis(), |a, b| k_sd * cell_kernel_mass(d, h, q, a, b, hd));
        Ok(Self { grid, s, k_sd, kernel })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn order(&self) -> f64 {
        self.s
    }

    pub fn normalization(&self) -> f64 {
        self.k_sd
    }

    pub fn apply_values(&self, f: &[f64]) -> Vec<f64> {
        self.kernel.convolve(f)
    }

    pub fn apply(&self, f: &Field) -> Result<Field> {
        if f.grid() != &self.grid {
            return Err(Error::GridMismatch);
        }
        Field::new(self.grid, self.apply_values(f.values()))
    }
}

/// `∫ |z|^{-q}` over the lattice cell at offset `(a, b)`.
///
/// Point sampling the kernel away from the centre cell converges only like
/// `h^{2s}`; integrating it exactly over the near cells restores the
/// accuracy of the smooth part.
fn cell_kernel_mass(d: usize, h: f64, q: f64, a: usize, b: usize, hd: f64) -> f64 {
    if a == 0 && b == 0 {
        return cell_integral(d, h, q);
    }
    match d {
        1 => {
            let (lo, hi) = ((a as f64 - 0.5) * h, (a as f64 + 0.5) * h);
            (hi.powf(1.0 - q) - lo.powf(1.0 - q)) / (1.0 - q)
        }
        _ if a.max(b) <= NEAR_CELLS => {
            let (xa, yb) = (a as f64 * h, b as f64 * h);
            simpson(
                |x| simpson(|y| x.hypot(y).powf(-q), yb - 0.5 * h, yb + 0.5 * h, 16),
                xa - 0.5 * h,
                xa + 0.5 * h,
                16,
            )
        }
        _ => hd / (h * ((a * a + b * b) as f64).sqrt()).powf(q),
    }
}

const NEAR_CELLS: usize = 6;

/// Convenience wrapper building the operator on the field's grid.
pub fn riesz_potential(f: &Field, s: f64) -> Result<Field> {
    RieszOperator::new(*f.grid(), s)?.apply(f)
}
