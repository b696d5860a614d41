use fpme_core::density::*;
use fpme_core::grid::Grid;
use proptest::prelude::*;

fn grid() -> Grid {
    Grid::new(1, 512, 80.0).unwrap()
}

#[test]
fn far_field_constant_on_outer_quarter() {
    let g = grid();
    for (kind, gamma, s) in [(DensityKind::Fast, 0.9, 0.2), (DensityKind::Slow, 0.25, 0.25)] {
        let p = ModelParams::new(2.0, s, 1, gamma, 1.7, 1.0, 1.0);
        let model = make_density(kind, p, g).unwrap();
        for k in 0..g.len() {
            let r = g.radius(k);
            if r >= 0.75 * g.half_extent() {
                let ratio = model.rho().values()[k] * r.powf(gamma) / 1.7;
                assert!((ratio - 1.0).abs() <= 0.05, "r={r} ratio={ratio}");
            }
        }
    }
}

#[test]
fn envelope_reports() {
    let g = grid();
    let flat = make_density(DensityKind::Slow, ModelParams::new(2.0, 0.25, 1, 0.0, 1.0, 1.0, 1.0), g).unwrap();
    let rep = flat.verify_envelope();
    assert_eq!((rep.lower, rep.upper, rep.pass), (Some(1.0), 1.0, true));

    let fast = make_density(DensityKind::Fast, ModelParams::new(2.0, 0.2, 1, 0.9, 1.0, 1.0, 1.0), g).unwrap();
    let rep = fast.verify_envelope();
    assert!(rep.pass && rep.upper <= 1.0, "{rep:?}");
}

#[test]
fn pure_power_origin_node_holds_the_cell_average() {
    let g = Grid::new(1, 64, 8.0).unwrap();
    let h = g.spacing();
    let p = ModelParams::new(2.0, 0.25, 1, 0.25, 2.0, 1.0, 1e-3 * h);
    let model = make_density(DensityKind::PurePower, p, g).unwrap();
    // ∫_{-h/2}^{h/2} |x|^{-γ} dx / h = (h/2)^{-γ} / (1 - γ)
    let exact = 2.0 * (0.5 * h).powf(-0.25) / 0.75;
    assert!((model.rho().values()[g.origin_node()] - exact).abs() < 1e-12 * exact);
    assert!(make_density(
        DensityKind::PurePower,
        ModelParams::new(2.0, 0.25, 1, 0.25, 1.0, 1.0, h),
        g
    )
    .is_err());
}

#[test]
fn rescaled_weight_tends_to_the_pure_power() {
    let g = grid();
    let p = ModelParams::new(2.0, 0.25, 1, 0.25, 1.3, 1.0, 2.0);
    let model = make_density(DensityKind::Slow, p, g).unwrap();
    let nodes: Vec<usize> = [0.5, 2.0, 10.0]
        .iter()
        .map(|&r| g.origin_node() + (r / g.spacing()) as usize)
        .collect();
    let mut prev = vec![f64::INFINITY; nodes.len()];
    for lambda in [1.0, 4.0, 16.0, 64.0] {
        let rl = model.rescale(lambda, 1.0);
        for (j, &k) in nodes.iter().enumerate() {
            let limit = 1.3 * g.radius(k).powf(-0.25);
            let err = (rl.values()[k] - limit).abs();
            assert!(err < prev[j], "λ={lambda} node={k}");
            prev[j] = err;
        }
    }
}

#[test]
fn rescaled_slow_weight_stays_in_the_envelope() {
    let g = grid();
    let (gamma, eps, c_inf) = (0.25, 1.5, 1.0);
    let model = make_density(
        DensityKind::Slow,
        ModelParams::new(2.0, 0.25, 1, gamma, c_inf, 1.0, eps),
        g,
    )
    .unwrap();
    let lower = c_inf / eps.powf(gamma).max(1.0);
    let rl = model.rescale(16.0, 1.0);
    for k in 0..g.len() {
        let r = g.radius(k);
        let v = rl.values()[k];
        assert!(v >= lower / (1.0 + r.powf(gamma)));
        if r > 0.0 {
            assert!(v <= c_inf * r.powf(-gamma));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn rescaling_composes(lambda in 0.1f64..20.0, mu in 0.1f64..20.0, kappa in 0.2f64..3.0, eps in 0.05f64..3.0) {
        let g = Grid::new(1, 64, 10.0).unwrap();
        let gamma = 0.3;
        let model = make_density(DensityKind::Slow, ModelParams::new(2.0, 0.25, 1, gamma, 1.0, 1.0, eps), g).unwrap();
        let direct = model.rescale(lambda * mu, kappa);
        for k in 0..g.len() {
            let x = g.radius(k);
            let inner = mu.powf(kappa * gamma) * model.eval(mu.powf(kappa) * lambda.powf(kappa) * x);
            let composed = lambda.powf(kappa * gamma) * inner;
            prop_assert!((direct.values()[k] - composed).abs() <= 1e-13 * composed);
        }
    }

    #[test]
    fn realized_weights_are_positive_with_finite_envelope(
        gamma in 0.0f64..0.49,
        eps in 0.05f64..4.0,
        c_inf in 0.1f64..10.0,
    ) {
        let g = Grid::new(1, 128, 20.0).unwrap();
        let model = make_density(DensityKind::Slow, ModelParams::new(2.0, 0.25, 1, gamma, c_inf, 1.0, eps), g).unwrap();
        prop_assert!(model.rho().min() > 0.0);
        // (ε² + r²)^{-γ/2} max(r, ε)^γ lies in [2^{-γ/2}, 1].
        let (lo, hi) = (c_inf * 2f64.powf(-0.5 * gamma), c_inf);
        for k in 0..g.len() {
            let v = model.rho().values()[k] * g.radius(k).max(eps).powf(gamma);
            prop_assert!(v >= lo * (1.0 - 1e-12) && v <= hi * (1.0 + 1e-12));
        }
        prop_assert!(model.verify_envelope().pass);
    }

    #[test]
    fn regimes_are_exclusive(gamma in 0.0f64..2.0, s in 0.05f64..0.49) {
        let p = ModelParams::new(2.0, s, 1, gamma, 1.0, 1.0, 1.0);
        prop_assert!(!(p.is_slow() && p.is_fast()));
        let g = Grid::new(1, 32, 4.0).unwrap();
        prop_assert_eq!(make_density(DensityKind::Slow, p, g).is_ok(), p.is_slow());
        prop_assert_eq!(make_density(DensityKind::Fast, p, g).is_ok(), p.is_fast());
    }
}
