use approx::assert_relative_eq;
use fpme_core::grid::{Field, Grid};
use fpme_core::operators::*;
use proptest::prelude::*;
use statrs::function::gamma::gamma;

/// `2 C ∫_0^∞ (1 - e^{-y²}) y^{-1-2s} dy`: trapezoid rule in `log y`, analytic tail past `e^5`.
fn gaussian_at_origin_by_pv_quadrature(s: f64) -> f64 {
    let c = 4f64.powf(s) * gamma(0.5 + s) / (std::f64::consts::PI.sqrt() * gamma(-s).abs());
    let (a, b, n) = (-40.0, 5.0, 200_000);
    let dt = (b - a) / n as f64;
    let mut acc = 0.0;
    for k in 0..=n {
        let t = a + k as f64 * dt;
        let y = f64::exp(t);
        let f = -(-y * y).exp_m1() * y.powf(-2.0 * s);
        acc += if k == 0 || k == n { 0.5 * f } else { f };
    }
    let tail = b.exp().powf(-2.0 * s) / (2.0 * s);
    2.0 * c * (acc * dt + tail)
}

fn gaussian(g: Grid) -> Field {
    Field::radial(g, |r| (-r * r).exp())
}

#[test]
fn spectral_gaussian_matches_principal_value_quadrature() {
    let g = Grid::new(1, 1024, 40.0).unwrap();
    let lap = frac_laplacian_spectral(&gaussian(g), 0.25).unwrap();
    let oracle = gaussian_at_origin_by_pv_quadrature(0.25);
    // Periodic images shift the value by about 2e-3 at this box size.
    assert_relative_eq!(lap.values()[g.origin_node()], oracle, max_relative = 5e-3);
}

#[test]
fn quadrature_agrees_with_spectral_on_gaussian() {
    let g = Grid::new(1, 1024, 40.0).unwrap();
    let q = laplacian_backend("quadrature", g, 0.25).unwrap();
    let sp = laplacian_backend("spectral", g, 0.25).unwrap();
    let gap = cross_validate(q.as_ref(), sp.as_ref(), &gaussian(g)).unwrap();
    assert!(gap <= 0.02, "gap {gap}");
}

#[test]
fn riesz_potential_of_narrow_bump_is_point_mass_potential() {
    let s = 0.25;
    let g = Grid::new(1, 2048, 40.0).unwrap();
    let h = g.spacing();
    let w = 2.0 * h;
    let bump = Field::radial(g, |r| (-(r / w).powi(2)).exp());
    let bump = bump.scaled(1.0 / bump.integral());
    let pot = riesz_potential(&bump, s).unwrap();
    let k = gamma(0.5 - s) / (4f64.powf(s) * std::f64::consts::PI.sqrt() * gamma(s));
    for r in [10.0, 20.0] {
        let node = g.origin_node() + (r / h).round() as usize;
        let exact = k * r.powf(-(1.0 - 2.0 * s));
        assert_relative_eq!(pot.values()[node], exact, max_relative = 0.01);
    }
}

#[test]
fn riesz_potential_inverts_the_fractional_laplacian() {
    let g = Grid::new(1, 1024, 40.0).unwrap();
    let residual = check_inverse_identity(&gaussian(g), 0.25).unwrap();
    assert!(residual <= 0.02, "residual {residual}");
}

#[test]
fn inverse_identity_improves_from_coarse_grids() {
    let res: Vec<f64> = [256, 512, 1024]
        .iter()
        .map(|&n| check_inverse_identity(&gaussian(Grid::new(1, n, 40.0).unwrap()), 0.25).unwrap())
        .collect();
    assert!(res.windows(2).all(|w| w[1] <= w[0]), "{res:?}");
}

#[test]
fn exterior_mass_grows_toward_the_boundary() {
    let g = Grid::new(1, 128, 10.0).unwrap();
    let op = QuadratureOperator::new(g, 0.3).unwrap();
    let t = op.tail();
    let o = g.origin_node();
    assert!(t.iter().all(|&v| v > 0.0));
    assert!(t[o..].windows(2).all(|w| w[1] > w[0]));
    assert!(t[..=o].windows(2).all(|w| w[1] <= w[0]));
    let ones = Field::constant(g, 1.0);
    let a1 = op.apply(&ones).unwrap();
    for (a, b) in a1.values().iter().zip(t) {
        assert_relative_eq!(*a, *b, max_relative = 1e-10);
    }
}

#[test]
fn two_dimensional_smoke() {
    let g = Grid::new(2, 32, 8.0).unwrap();
    let f = Field::radial(g, |r| (-r * r).exp());
    for name in backend_names() {
        let op = laplacian_backend(name, g, 0.3).unwrap();
        let out = op.apply(&f).unwrap();
        assert!(out.is_finite());
        assert!(out.values()[g.origin_node()] > 0.0);
    }
}

fn field_strategy(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, n)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn quadrature_is_symmetric(f in field_strategy(64), h in field_strategy(64), s in 0.05f64..0.95) {
        let g = Grid::new(1, 64, 6.0).unwrap();
        let op = QuadratureOperator::new(g, s).unwrap();
        let (f, h) = (Field::new(g, f).unwrap(), Field::new(g, h).unwrap());
        let lhs = op.apply(&f).unwrap().inner(&h).unwrap();
        let rhs = f.inner(&op.apply(&h).unwrap()).unwrap();
        let scale = lhs.abs().max(rhs.abs()).max(1.0);
        prop_assert!((lhs - rhs).abs() <= 1e-12 * scale);
    }

    #[test]
    fn quadrature_conserves_up_to_the_exterior_flux(f in field_strategy(64), s in 0.05f64..0.95) {
        let g = Grid::new(1, 64, 6.0).unwrap();
        let f = Field::new(g, f).unwrap();
        let op = QuadratureOperator::new(g, s).unwrap();
        let total = op.apply(&f).unwrap().integral();
        let flux: f64 = op.tail().iter().zip(f.values()).map(|(t, v)| t * v).sum::<f64>() * g.spacing();
        prop_assert!((total - flux).abs() <= 1e-10 * (1.0 + flux.abs()));
        let closed = op.with_tail(false).apply(&f).unwrap().integral();
        prop_assert!(closed.abs() <= 1e-10);
    }

    #[test]
    fn quadrature_has_maximum_principle_structure(
        f in prop::collection::vec(0.0f64..1.0, 64),
        zero in 0usize..64,
        s in 0.05f64..0.95,
    ) {
        let g = Grid::new(1, 64, 6.0).unwrap();
        let mut f = f;
        f[zero] = 0.0;
        let op = QuadratureOperator::new(g, s).unwrap();
        let af = op.apply(&Field::new(g, f).unwrap()).unwrap();
        prop_assert!(af.values()[zero] <= 1e-14);
    }

    #[test]
    fn spectral_cosines_are_eigenfunctions(k in 1usize..31, s in 0.05f64..0.95) {
        let g = Grid::new(1, 64, 5.0).unwrap();
        let xi = std::f64::consts::PI * k as f64 / g.half_extent();
        let f = Field::from_fn(g, |[x, _]| (xi * x).cos());
        let out = frac_laplacian_spectral(&f, s).unwrap();
        let lambda = xi.powf(2.0 * s);
        for (a, b) in out.values().iter().zip(f.values()) {
            prop_assert!((a - lambda * b).abs() <= 1e-11 * lambda.max(1.0));
        }
    }

    #[test]
    fn riesz_potential_is_positive_and_linear(
        f in prop::collection::vec(0.0f64..1.0, 64),
        c in 0.1f64..10.0,
        s in 0.05f64..0.45,
    ) {
        let g = Grid::new(1, 64, 6.0).unwrap();
        let f = Field::new(g, f).unwrap();
        let p = riesz_potential(&f, s).unwrap();
        let pc = riesz_potential(&f.scaled(c), s).unwrap();
        prop_assert!(p.values().iter().all(|&v| v >= 0.0));
        for (a, b) in pc.values().iter().zip(p.values()) {
            prop_assert!((a - c * b).abs() <= 1e-12 * (1.0 + a.abs()));
        }
    }
}
