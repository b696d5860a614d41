//! Uniform truncated lattices and the fields sampled on them.
//!
//! A grid covers `[-L, L)^d` with `n` nodes per axis. Node `i` along an axis
//! sits at `(i - n/2) h` with `h = 2L/n`, so the origin is always a node and
//! the lattice is symmetric under `x -> -x` modulo the period `2L`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MIN_POINTS_PER_AXIS: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    dim: usize,
    n: usize,
    half_extent: f64,
}

impl Grid {
    pub fn new(dim: usize, n: usize, half_extent: f64) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(Error::InvalidGrid(format!("dimension must be 1 or 2, got {dim}")));
        }
        if n == 0 || n % 2 != 0 {
            return Err(Error::InvalidGrid(format!("points per axis must be even, got {n}")));
        }
        if !(half_extent > 0.0 && half_extent.is_finite()) {
            return Err(Error::InvalidGrid(format!(
                "half extent must be positive, got {half_extent}"
            )));
        }
        Ok(Self { dim, n, half_extent })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_per_axis(&self) -> usize {
        self.n
    }

    pub fn half_extent(&self) -> f64 {
        self.half_extent
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_extent / self.n as f64
    }

    /// Volume of one cell, `h^d`.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Coordinate of axis index `i`.
    pub fn axis_coord(&self, i: usize) -> f64 {
        (i as f64 - (self.n / 2) as f64) * self.spacing()
    }

    pub fn axis_coords(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.axis_coord(i)).collect()
    }

    /// Axis indices of a flat (row-major) node index.
    pub fn multi_index(&self, node: usize) -> [usize; 2] {
        match self.dim {
            1 => [node, 0],
            _ => [node / self.n, node % self.n],
        }
    }

    pub fn coords(&self, node: usize) -> [f64; 2] {
        let [i, j] = self.multi_index(node);
        match self.dim {
            1 => [self.axis_coord(i), 0.0],
            _ => [self.axis_coord(i), self.axis_coord(j)],
        }
    }

    pub fn radius(&self, node: usize) -> f64 {
        let [x, y] = self.coords(node);
        x.hypot(y)
    }

    pub fn radii(&self) -> Vec<f64> {
        (0..self.len()).map(|k| self.radius(k)).collect()
    }

    pub fn origin_node(&self) -> usize {
        match self.dim {
            1 => self.n / 2,
            _ => (self.n / 2) * self.n + self.n / 2,
        }
    }

    /// Nodes whose sup-norm coordinate lies within `fraction * L`.
    pub fn inner_mask(&self, fraction: f64) -> Vec<bool> {
        let limit = fraction * self.half_extent + 1e-12 * self.spacing();
        (0..self.len())
            .map(|k| {
                let [x, y] = self.coords(k);
                x.abs().max(y.abs()) <= limit
            })
            .collect()
    }
}

/// Real values sampled on every node of a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Field {
    grid: Grid,
    values: Vec<f64>,
}

impl Field {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidGrid(format!(
                "expected {} values, got {}",
                grid.len(),
                values.len()
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Grid) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn constant(grid: Grid, c: f64) -> Self {
        Self {
            grid,
            values: vec![c; grid.len()],
        }
    }

    /// Samples `f` at every node; `f` receives the coordinates.
    pub fn from_fn(grid: Grid, f: impl Fn([f64; 2]) -> f64) -> Self {
        let values = (0..grid.len()).map(|k| f(grid.coords(k))).collect();
        Self { grid, values }
    }

    /// Samples a radial profile.
    pub fn radial(grid: Grid, f: impl Fn(f64) -> f64) -> Self {
        Self::from_fn(grid, |[x, y]| f(x.hypot(y)))
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Field {
        Field {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_map(&self, other: &Field, f: impl Fn(f64, f64) -> f64) -> Result<Field> {
        self.ensure_same_grid(other)?;
        let values = self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect();
        Ok(Field {
            grid: self.grid,
            values,
        })
    }

    pub fn scaled(&self, c: f64) -> Field {
        self.map(|v| c * v)
    }

    pub fn ensure_same_grid(&self, other: &Field) -> Result<()> {
        if self.grid == other.grid {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// `sum_i f_i h^d`.
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.cell_volume()
    }

    /// `sum_i f_i g_i h^d`.
    pub fn inner(&self, other: &Field) -> Result<f64> {
        self.ensure_same_grid(other)?;
        Ok(self.values.iter().zip(&other.values).map(|(a, b)| a * b).sum::<f64>() * self.grid.cell_volume())
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Sup-norm of the values restricted to `mask`.
    pub fn masked_sup(&self, mask: &[bool]) -> f64 {
        self.values
            .iter()
            .zip(mask)
            .filter(|(_, &m)| m)
            .fold(0.0_f64, |acc, (v, _)| acc.max(v.abs()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spacing_and_nodes() {
        let g = Grid::new(1, 8, 4.0).unwrap();
        assert_eq!(g.spacing(), 1.0);
        assert_eq!(g.axis_coords(), vec![-4.0, -3.0, -2.0, -1.0, 0.0, 1.0, 2.0, 3.0]);
        assert_eq!(g.coords(g.origin_node()), [0.0, 0.0]);

        let g = Grid::new(1, 1024, 40.0).unwrap();
        assert_eq!(g.spacing(), 0.078125);

        let g = Grid::new(2, 16, 2.0).unwrap();
        assert_eq!(g.len(), 256);
        assert_eq!(g.spacing(), 0.25);
        assert_eq!(g.coords(g.origin_node()), [0.0, 0.0]);
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(Grid::new(1, 7, 1.0).is_err());
        assert!(Grid::new(1, 8, 0.0).is_err());
        assert!(Grid::new(1, 8, -1.0).is_err());
        assert!(Grid::new(3, 8, 1.0).is_err());
    }

    #[test]
    fn symmetric_about_origin() {
        let g = Grid::new(1, 32, 3.0).unwrap();
        let o = g.origin_node();
        for k in 1..16 {
            assert_eq!(g.axis_coord(o + k), -g.axis_coord(o - k));
        }
    }

    #[test]
    fn inner_products() {
        let g = Grid::new(1, 16, 2.0).unwrap();
        let a = Field::constant(g, 2.0);
        let b = Field::constant(g, 3.0);
        assert!((a.inner(&b).unwrap() - 6.0 * 4.0).abs() < 1e-12);
        let other = Field::zeros(Grid::new(1, 32, 2.0).unwrap());
        assert_eq!(a.inner(&other), Err(Error::GridMismatch));
    }
}
