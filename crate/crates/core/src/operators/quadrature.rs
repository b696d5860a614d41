//! Monotone quadrature discretization of the singular-integral form of
//! `(-Δ)^s` on the truncated box, with the field taken as zero outside.
//!
//! `(Af)_i = Σ_{j≠i} W_ij (f_i - f_j) + T_i f_i`, where `W_ij` carries the
//! normalization and `T_i` is the exact kernel integral over the exterior of
//! the box. The cell around `x_i` is handled by a Taylor correction that
//! adds weight to the nearest neighbours, so every `W_ij` stays nonnegative.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::grid::{Field, Grid, MIN_POINTS_PER_AXIS};

use super::constants::{cell_integral, frac_laplacian_constant, simpson};
use super::toeplitz::ToeplitzKernel;
use super::{check_order, FractionalLaplacian};

#[derive(Debug, Clone)]
pub struct QuadratureOperator {
    grid: Grid,
    s: f64,
    c_ds: f64,
    kernel: ToeplitzKernel,
    row_sums: Vec<f64>,
    tail: Vec<f64>,
    tail_enabled: bool,
}

impl QuadratureOperator {
    /// Builds the operator with the exterior tail enabled.
    pub fn new(grid: Grid, s: f64) -> Result<Self> {
        check_order(s)?;
        let n = grid.n_per_axis();
        if n < MIN_POINTS_PER_AXIS {
            return Err(Error::InvalidGrid(format!(
                "the singular-cell stencil needs at least {MIN_POINTS_PER_AXIS} points per axis, got {n}"
            )));
        }
        let d = grid.dim();
        let h = grid.spacing();
        let c_ds = frac_laplacian_constant(d, s);
        let hd = grid.cell_volume();
        let p = d as f64 + 2.0 * s;

        let mut kernel = ToeplitzKernel::from_fn(d, n, |a, b| {
            if a == 0 && b == 0 {
                0.0
            } else {
                let r = h * ((a * a + b * b) as f64).sqrt();
                c_ds * hd / r.powf(p)
            }
        });
        let local = c_ds * cell_integral(d, h, p - 2.0) / (2.0 * d as f64 * h * h);
        *kernel.weight_mut(1, 0) += local;
        if d == 2 {
            *kernel.weight_mut(0, 1) += local;
        }

        let row_sums = kernel.convolve(&vec![1.0; grid.len()]);
        let tail = (0..grid.len()).map(|k| c_ds * exterior_integral(&grid, k, s)).collect();
        Ok(Self {
            grid,
            s,
            c_ds,
            kernel,
            row_sums,
            tail,
            tail_enabled: true,
        })
    }

    pub fn with_tail(mut self, enabled: bool) -> Self {
        self.tail_enabled = enabled;
        self
    }

    pub fn tail_enabled(&self) -> bool {
        self.tail_enabled
    }

    pub fn normalization(&self) -> f64 {
        self.c_ds
    }

    /// Exterior kernel mass `T_i` (including the normalization).
    pub fn tail(&self) -> &[f64] {
        &self.tail
    }

    /// `Σ_{j≠i} W_ij`.
    pub fn row_sums(&self) -> &[f64] {
        &self.row_sums
    }

    /// Diagonal entry of the matrix: row sum plus tail when enabled.
    pub fn diagonal(&self, node: usize) -> f64 {
        self.row_sums[node] + if self.tail_enabled { self.tail[node] } else { 0.0 }
    }

    /// Off-diagonal coupling `W_ij` (the matrix entry is `-W_ij`).
    pub fn weight(&self, i: usize, j: usize) -> f64 {
        if i == j {
            return 0.0;
        }
        let [a, b] = self.grid.multi_index(i);
        let [c, e] = self.grid.multi_index(j);
        self.kernel.weight(a.abs_diff(c), b.abs_diff(e))
    }

    pub fn apply_values(&self, f: &[f64]) -> Vec<f64> {
        let coupled = self.kernel.convolve(f);
        coupled
            .iter()
            .enumerate()
            .map(|(i, c)| self.diagonal(i) * f[i] - c)
            .collect()
    }
}

impl QuadratureOperator {
    /// Solves `A x = b` by Jacobi-preconditioned conjugate gradients to a
    /// relative residual `rtol`. Needs the tail, which makes `A` definite.
    pub fn solve(&self, b: &[f64], rtol: f64) -> Result<Vec<f64>> {
        if !self.tail_enabled {
            return Err(Error::InvalidParameter(
                "the operator without exterior tail is singular".into(),
            ));
        }
        let len = self.grid.len();
        if b.len() != len {
            return Err(Error::GridMismatch);
        }
        let dot = |a: &[f64], c: &[f64]| a.iter().zip(c).map(|(x, y)| x * y).sum::<f64>();
        let inv_diag: Vec<f64> = (0..len).map(|i| 1.0 / self.diagonal(i)).collect();
        let b_norm = dot(b, b).sqrt();
        let mut x = vec![0.0; len];
        if b_norm == 0.0 {
            return Ok(x);
        }
        let mut r = b.to_vec();
        let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(a, d)| a * d).collect();
        let mut p = z.clone();
        let mut rz = dot(&r, &z);
        let cap = 10 * len + 100;
        for _ in 0..cap {
            let ap = self.apply_values(&p);
            let step = rz / dot(&p, &ap);
            for ((xi, ri), (pi, api)) in x.iter_mut().zip(r.iter_mut()).zip(p.iter().zip(&ap)) {
                *xi += step * pi;
                *ri -= step * api;
            }
            if dot(&r, &r).sqrt() <= rtol * b_norm {
                return Ok(x);
            }
            for ((zi, ri), d) in z.iter_mut().zip(&r).zip(&inv_diag) {
                *zi = ri * d;
            }
            let rz_next = dot(&r, &z);
            let beta = rz_next / rz;
            rz = rz_next;
            for (pi, zi) in p.iter_mut().zip(&z) {
                *pi = zi + beta * *pi;
            }
        }
        Err(Error::IterationCap(cap))
    }
}

impl FractionalLaplacian for QuadratureOperator {
    fn name(&self) -> &'static str {
        "quadrature"
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
        Field::new(self.grid, self.apply_values(f.values()))
    }
}

/// `∫_{ℝ^d \ box} |x_k - y|^{-d-2s} dy` for the box covered by the cells.
fn exterior_integral(grid: &Grid, node: usize, s: f64) -> f64 {
    let h = grid.spacing();
    let lo = -grid.half_extent() - 0.5 * h;
    let hi = grid.half_extent() - 0.5 * h;
    let [x, y] = grid.coords(node);
    match grid.dim() {
        1 => ((x - lo).powf(-2.0 * s) + (hi - x).powf(-2.0 * s)) / (2.0 * s),
        _ => {
            // ∫ dθ ∫_{r_b(θ)}^∞ r^{-1-2s} dr, split at the corner directions.
            let exit = |t: f64| {
                let (c, sn) = (t.cos(), t.sin());
                let tx = if c > 0.0 {
                    (hi - x) / c
                } else if c < 0.0 {
                    (lo - x) / c
                } else {
                    f64::INFINITY
                };
                let ty = if sn > 0.0 {
                    (hi - y) / sn
                } else if sn < 0.0 {
                    (lo - y) / sn
                } else {
                    f64::INFINITY
                };
                tx.min(ty).powf(-2.0 * s) / (2.0 * s)
            };
            let mut corners: Vec<f64> = [(hi, hi), (lo, hi), (lo, lo), (hi, lo)]
                .iter()
                .map(|&(cx, cy)| (cy - y).atan2(cx - x).rem_euclid(2.0 * PI))
                .collect();
            corners.sort_by(f64::total_cmp);
            let mut total = 0.0;
            for k in 0..4 {
                let a = corners[k];
                let b = if k == 3 { corners[0] + 2.0 * PI } else { corners[k + 1] };
                total += simpson(&exit, a, b, 128);
            }
            total
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn op(dim: usize, n: usize, l: f64, s: f64) -> QuadratureOperator {
        QuadratureOperator::new(Grid::new(dim, n, l).unwrap(), s).unwrap()
    }

    #[test]
    fn rejects_small_grids_and_bad_orders() {
        let g = Grid::new(1, 8, 1.0).unwrap();
        assert!(matches!(QuadratureOperator::new(g, 0.3), Err(Error::InvalidGrid(_))));
        let g = Grid::new(1, 16, 1.0).unwrap();
        assert!(matches!(QuadratureOperator::new(g, 1.0), Err(Error::InvalidOrder(_))));
        assert!(matches!(QuadratureOperator::new(g, 0.0), Err(Error::InvalidOrder(_))));
    }

    #[test]
    fn constants_are_equilibria_without_tail() {
        for dim in [1, 2] {
            let a = op(dim, 16, 2.0, 0.3).with_tail(false);
            let one = Field::constant(*a.grid(), 1.0);
            let out = a.apply(&one).unwrap();
            assert!(out.sup_norm() < 1e-12 * a.diagonal(0), "{}", out.sup_norm());
        }
    }

    #[test]
    fn exterior_mass_is_positive_and_grows_toward_the_boundary() {
        let a = op(1, 64, 4.0, 0.25);
        let out = a.apply(&Field::constant(*a.grid(), 1.0)).unwrap();
        let o = a.grid().origin_node();
        assert!(out.values().iter().all(|&v| v > 0.0));
        for k in o..63 {
            assert!(out.values()[k + 1] > out.values()[k]);
        }
        // The cells cover [-L - h/2, L - h/2], so node o - 1 mirrors node o.
        for k in 1..o {
            assert!(out.values()[k - 1] > out.values()[k]);
        }
    }

    #[test]
    fn exterior_integral_two_dimensional_matches_disc_bound() {
        // At the centre of the box, the exterior lies between the complements
        // of the inscribed and circumscribed discs.
        let g = Grid::new(2, 32, 4.0).unwrap();
        let s = 0.3;
        let r_in = 4.0 - 0.5 * g.spacing();
        let t = exterior_integral(&g, g.origin_node(), s);
        let disc = |r: f64| 2.0 * PI * r.powf(-2.0 * s) / (2.0 * s);
        assert!(t < disc(r_in) && t > disc(r_in * 2f64.sqrt()), "{t}");
    }

    #[test]
    fn solve_inverts_apply() {
        for dim in [1, 2] {
            let a = op(dim, 32, 4.0, 0.3);
            let f = Field::radial(*a.grid(), |r| (-r * r).exp() + 0.1);
            let b = a.apply_values(f.values());
            let x = a.solve(&b, 1e-13).unwrap();
            for (u, v) in x.iter().zip(f.values()) {
                assert!((u - v).abs() < 1e-10, "{u} {v}");
            }
        }
        assert!(op(1, 32, 4.0, 0.3).with_tail(false).solve(&[0.0; 32], 1e-12).is_err());
    }

    #[test]
    fn matrix_is_symmetric_with_nonnegative_couplings() {
        for dim in [1, 2] {
            let a = op(dim, 16, 2.0, 0.4);
            let len = a.grid().len();
            for i in (0..len).step_by(7) {
                for j in (0..len).step_by(5) {
                    assert_eq!(a.weight(i, j), a.weight(j, i));
                    assert!(a.weight(i, j) >= 0.0);
                }
            }
        }
    }
}
