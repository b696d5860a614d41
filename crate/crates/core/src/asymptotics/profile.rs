use serde::{Deserialize, Serialize};

use super::ScalingExponents;
use crate::density::origin_cell_average;
use crate::error::{Error, Result};
use crate::grid::{Field, Grid};

/// A field together with the nodes on which it carries information.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaskedField {
    pub field: Field,
    pub valid: Vec<bool>,
}

impl MaskedField {
    pub fn full(field: Field) -> Self {
        let valid = vec![true; field.grid().len()];
        Self { field, valid }
    }

    pub fn grid(&self) -> &Grid {
        self.field.grid()
    }

    pub fn valid_count(&self) -> usize {
        self.valid.iter().filter(|&&v| v).count()
    }

    /// Largest radius `r` such that every node with `|x| ≤ r` is valid.
    pub fn valid_radius(&self) -> f64 {
        let g = self.grid();
        (0..g.len())
            .filter(|&k| !self.valid[k])
            .map(|k| g.radius(k))
            .fold(f64::INFINITY, f64::min)
    }
}

/// Position of `y` on the axis in index units, or `None` outside the lattice.
fn locate(grid: &Grid, y: f64) -> Option<(usize, f64)> {
    let n = grid.n_per_axis();
    let p = y / grid.spacing() + (n / 2) as f64;
    if !(p >= 0.0 && p <= (n - 1) as f64) {
        return None;
    }
    let i = (p.floor() as usize).min(n - 2);
    Some((i, p - i as f64))
}

/// Piecewise (bi)linear interpolant of `u` at `y`.
pub fn interpolate(u: &Field, y: [f64; 2]) -> Option<f64> {
    let g = u.grid();
    let v = u.values();
    let (i, a) = locate(g, y[0])?;
    match g.dim() {
        1 => Some((1.0 - a) * v[i] + a * v[i + 1]),
        _ => {
            let (j, b) = locate(g, y[1])?;
            let n = g.n_per_axis();
            let at = |p: usize, q: usize| v[p * n + q];
            Some(
                (1.0 - a) * ((1.0 - b) * at(i, j) + b * at(i, j + 1))
                    + a * ((1.0 - b) * at(i + 1, j) + b * at(i + 1, j + 1)),
            )
        }
    }
}

/// `x ↦ t^α u(t^κ x)` sampled on the grid of `u`; nodes mapped outside the box are invalid.
/// Fails when only the origin survives.
pub fn rescaled_profile(u: &Field, t: f64, exps: &ScalingExponents) -> Result<MaskedField> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "rescaling time must be positive, got {t}"
        )));
    }
    let g = *u.grid();
    let stretch = t.powf(exps.kappa);
    let amp = t.powf(exps.alpha);
    let mut values = vec![0.0; g.len()];
    let mut valid = vec![false; g.len()];
    for k in 0..g.len() {
        let [x, y] = g.coords(k);
        if let Some(v) = interpolate(u, [stretch * x, stretch * y]) {
            values[k] = amp * v;
            valid[k] = true;
        }
    }
    let origin = g.origin_node();
    if !valid.iter().enumerate().any(|(k, &v)| v && k != origin) {
        return Err(Error::InsufficientData(format!(
            "rescaling at t={t} maps every node outside the box"
        )));
    }
    Ok(MaskedField {
        field: Field::new(g, values)?,
        valid,
    })
}

/// `(ε² + |x|²)^{-γ/2}`, capped at the origin node by the cell average of `|x|^{-γ}`.
pub fn distance_weight(grid: Grid, gamma: f64, eps_reg: f64) -> Field {
    let mut w = Field::radial(grid, |r| (eps_reg * eps_reg + r * r).powf(-0.5 * gamma));
    let o = grid.origin_node();
    let cap = origin_cell_average(&grid, gamma);
    w.values_mut()[o] = w.values()[o].min(cap);
    w
}

/// `Σ |f - g| (ε² + |x|²)^{-γ/2} h^d` over nodes valid in both.
pub fn weighted_l1_distance(f: &MaskedField, g: &MaskedField, gamma: f64, eps_reg: f64) -> Result<f64> {
    f.field.ensure_same_grid(&g.field)?;
    let grid = *f.grid();
    let w = distance_weight(grid, gamma, eps_reg);
    let sum: f64 = (0..grid.len())
        .filter(|&k| f.valid[k] && g.valid[k])
        .map(|k| (f.field.values()[k] - g.field.values()[k]).abs() * w.values()[k])
        .sum();
    Ok(sum * grid.cell_volume())
}

/// `Σ |f| (ε² + |x|²)^{-γ/2} h^d` over valid nodes.
pub fn weighted_l1_norm(f: &MaskedField, gamma: f64, eps_reg: f64) -> f64 {
    let grid = *f.grid();
    let w = distance_weight(grid, gamma, eps_reg);
    (0..grid.len())
        .filter(|&k| f.valid[k])
        .map(|k| f.field.values()[k].abs() * w.values()[k])
        .sum::<f64>()
        * grid.cell_volume()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exps(alpha: f64, kappa: f64) -> ScalingExponents {
        ScalingExponents {
            alpha,
            kappa,
            beta: 0.0,
            c_m: 1.0,
        }
    }

    #[test]
    fn unit_time_is_identity() {
        let g = Grid::new(1, 64, 8.0).unwrap();
        let u = Field::radial(g, |r| (-r * r).exp());
        let p = rescaled_profile(&u, 1.0, &exps(0.7, 0.4)).unwrap();
        assert_eq!(p.field, u);
        assert!(p.valid.iter().all(|&v| v));
    }

    #[test]
    fn interpolation_is_exact_on_linear_data() {
        let g = Grid::new(2, 16, 4.0).unwrap();
        let u = Field::from_fn(g, |[x, y]| 2.0 * x - y + 1.0);
        let v = interpolate(&u, [0.3, -1.7]).unwrap();
        assert!((v - (0.6 + 1.7 + 1.0)).abs() < 1e-12);
        assert!(interpolate(&u, [4.0, 0.0]).is_none());
    }

    #[test]
    fn late_times_invalidate_the_outer_nodes() {
        let g = Grid::new(1, 64, 8.0).unwrap();
        let u = Field::constant(g, 1.0);
        let p = rescaled_profile(&u, 4.0, &exps(0.5, 1.0)).unwrap();
        assert!(p.valid_count() < g.len() / 3);
        assert!((p.valid_radius() - 2.0).abs() < 0.5);
        assert!(rescaled_profile(&u, 1e6, &exps(0.5, 1.0)).is_err());
    }
}
