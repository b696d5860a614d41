//! `(-Δ)^s` as the Fourier multiplier `|ξ|^{2s}` on the periodized box.

use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::grid::{Field, Grid};

use super::{check_order, FractionalLaplacian};

pub struct SpectralOperator {
    grid: Grid,
    s: f64,
    multipliers: Vec<f64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for SpectralOperator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SpectralOperator")
            .field("grid", &self.grid)
            .field("s", &self.s)
            .finish()
    }
}

/// Angular wavenumber of FFT bin `k` on a period of length `2L`.
fn wavenumber(k: usize, n: usize, half_extent: f64) -> f64 {
    let signed = if k <= n / 2 { k as f64 } else { k as f64 - n as f64 };
    PI * signed / half_extent
}

impl SpectralOperator {
    pub fn new(grid: Grid, s: f64) -> Result<Self> {
        check_order(s)?;
        let n = grid.n_per_axis();
        let l = grid.half_extent();
        let xi: Vec<f64> = (0..n).map(|k| wavenumber(k, n, l)).collect();
        let multipliers = match grid.dim() {
            1 => xi.iter().map(|k| k.abs().powf(2.0 * s)).collect(),
            _ => (0..n * n)
                .map(|p| (xi[p / n].powi(2) + xi[p % n].powi(2)).powf(s))
                .collect(),
        };
        let mut planner = FftPlanner::new();
        Ok(Self {
            grid,
            s,
            multipliers,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        })
    }

    fn transform(&self, data: &mut [Complex64], fft: &Arc<dyn Fft<f64>>) {
        let n = self.grid.n_per_axis();
        // Rows (the only axis in 1-D).
        fft.process(data);
        if self.grid.dim() == 2 {
            let mut column = vec![Complex64::default(); n];
            for j in 0..n {
                for i in 0..n {
                    column[i] = data[i * n + j];
                }
                fft.process(&mut column);
                for i in 0..n {
                    data[i * n + j] = column[i];
                }
            }
        }
    }
}

impl FractionalLaplacian for SpectralOperator {
    fn name(&self) -> &'static str {
        "spectral"
    }

    fn grid(&self) -> &Grid {
        &self.grid
    }

    fn order(&self) -> f64 {
        self.s
    }

    fn apply(&self, f: &Field) -> Result<Field> {
        if f.grid() != &self.grid {
            return Err(Error::GridMismatch);
        }
        let mut data: Vec<Complex64> = f.values().iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.transform(&mut data, &self.forward);
        for (c, m) in data.iter_mut().zip(&self.multipliers) {
            *c *= *m;
        }
        self.transform(&mut data, &self.inverse);
        let scale = 1.0 / self.grid.len() as f64;
        Field::new(self.grid, data.iter().map(|c| c.re * scale).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constants_map_to_zero() {
        let g = Grid::new(1, 64, 3.0).unwrap();
        let op = SpectralOperator::new(g, 0.35).unwrap();
        let out = op.apply(&Field::constant(g, 2.5)).unwrap();
        assert!(out.sup_norm() < 1e-13);
    }

    #[test]
    fn lattice_cosines_are_eigenfunctions() {
        let s = 0.3;
        let g = Grid::new(1, 128, 5.0).unwrap();
        let op = SpectralOperator::new(g, s).unwrap();
        for mode in [1usize, 7, 30] {
            let k = PI * mode as f64 / 5.0;
            let f = Field::from_fn(g, |[x, _]| (k * x).cos());
            let out = op.apply(&f).unwrap();
            let expected = f.scaled(k.powf(2.0 * s));
            let err = out.zip_map(&expected, |a, b| a - b).unwrap().sup_norm();
            assert!(err < 1e-12 * k.powf(2.0 * s), "mode {mode}: {err}");
        }
    }

    #[test]
    fn two_dimensional_eigenfunction() {
        let s = 0.4;
        let g = Grid::new(2, 16, 2.0).unwrap();
        let op = SpectralOperator::new(g, s).unwrap();
        let (k1, k2) = (PI * 2.0 / 2.0, PI * 3.0 / 2.0);
        let f = Field::from_fn(g, |[x, y]| (k1 * x).cos() * (k2 * y).cos());
        let out = op.apply(&f).unwrap();
        let lam = (k1 * k1 + k2 * k2).powf(s);
        let err = out.zip_map(&f, |a, b| a - lam * b).unwrap().sup_norm();
        assert!(err < 1e-12 * lam);
    }

    #[test]
    fn rejects_orders_outside_unit_interval() {
        let g = Grid::new(1, 16, 1.0).unwrap();
        assert!(SpectralOperator::new(g, 1.2).is_err());
        assert!(SpectralOperator::new(g, -0.1).is_err());
    }
}
