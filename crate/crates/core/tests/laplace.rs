use critical_tree::laplace::{
    division_forms, exp_integral_e1, kernel_transform, kernel_transform_identities, laplace_of_increments,
    moment_integrals, moment_integrals_from_density, tail_product, Identity, Tail, Weight,
};
use critical_tree::quad::integrate_to_infinity;
use critical_tree::renewal::{f_prime, model_b_cdf, solve_renewal, solve_renewal_richardson, GridFunction, GridKind};

fn long_grid() -> GridFunction {
    solve_renewal_richardson(0.05, 400.0).unwrap()
}

#[test]
fn e1_against_quadrature() {
    for s in [0.1, 0.5, 1.0, 2.0, 7.5] {
        let oracle = integrate_to_infinity(|u| (-u).exp() / u, s, 1.0, 1e-15);
        let e1 = exp_integral_e1(s).unwrap();
        assert!(((e1 - oracle) / oracle).abs() < 1e-12, "s={s}: {e1} vs {oracle}");
    }
    assert!((exp_integral_e1(1.0).unwrap() - 0.219_384).abs() < 1e-6);
    let s = 1e-6f64;
    let ratio = exp_integral_e1(s).unwrap() / -s.ln();
    assert!((ratio - 1.0).abs() < 0.05, "{ratio}");
    assert!(exp_integral_e1(0.0).is_err());
    assert!(exp_integral_e1(-1.0).is_err());
}

#[test]
fn mass_near_zero_frequency() {
    let f = long_grid();
    let e = laplace_of_increments(&f, 1e-4, Weight::One, Tail::Reciprocal).unwrap();
    assert!((0.98..=1.0).contains(&e.value), "{}", e.value);
    assert!(e.reliable);
}

#[test]
fn transforms_decrease_in_s() {
    let f = long_grid();
    for w in [Weight::One, Weight::T, Weight::T2] {
        let values: Vec<f64> = [1e-3, 1e-2, 0.1, 1.0]
            .iter()
            .map(|&s| laplace_of_increments(&f, s, w, Tail::Reciprocal).unwrap().value)
            .collect();
        assert!(values.windows(2).all(|v| v[0] >= v[1]), "{w:?}: {values:?}");
    }
}

#[test]
fn truncation_share_is_reported_without_tail() {
    let f = solve_renewal(0.05, 50.0).unwrap();
    let e = laplace_of_increments(&f, 1e-4, Weight::T2, Tail::None).unwrap();
    assert!(e.tail_share > 0.5);
    assert!(!e.reliable);
}

#[test]
fn stieltjes_and_density_moments_agree() {
    let f = solve_renewal(0.01, 50.0).unwrap();
    let d = f_prime(&f);
    for h in [10.0, 25.0, 50.0] {
        let a = moment_integrals(&f, h).unwrap();
        let b = moment_integrals_from_density(&d, h).unwrap();
        assert!((a.m - b.m).abs() < 1e-4 * (1.0 + a.m), "h={h}");
        assert!((a.s2 - b.s2).abs() < 1e-4 * (1.0 + a.s2), "h={h}");
    }
}

#[test]
fn moments_grow_and_diagnostics_trend() {
    let f = long_grid();
    let m: Vec<_> = [100.0, 200.0, 400.0]
        .iter()
        .map(|&h| moment_integrals(&f, h).unwrap())
        .collect();
    assert!(m.windows(2).all(|w| w[1].m >= w[0].m && w[1].s2 >= w[0].s2));
    let dm1 = m[1].m - m[0].m;
    let dm2 = m[2].m - m[1].m;
    let log2 = std::f64::consts::LN_2;
    assert!((dm2 - log2).abs() < (dm1 - log2).abs());
    let tp: Vec<f64> = [100.0, 200.0, 400.0]
        .iter()
        .map(|&t| tail_product(&f, t).unwrap())
        .collect();
    assert!(tp.windows(2).all(|w| (w[1] - 1.0).abs() < (w[0] - 1.0).abs()), "{tp:?}");
}

#[test]
fn closed_form_tail_product() {
    let h = 0.5;
    let values: Vec<f64> = (0..=800).map(|i| model_b_cdf(i as f64 * h)).collect();
    let f = GridFunction::new(h, values, GridKind::Cdf);
    let tp = tail_product(&f, 400.0).unwrap();
    assert!((tp - 400.0 / 401.0).abs() < 1e-12);
    assert!((tp - 0.997_51).abs() < 1e-5);
    assert_eq!(tail_product(&f, 0.0).unwrap(), 0.0);
}

#[test]
fn transformed_identities_hold() {
    let f = long_grid();
    for s in [0.1, 1.0] {
        for id in [Identity::Density, Identity::FirstMoment, Identity::SecondMoment] {
            let c = kernel_transform_identities(&f, s, id).unwrap();
            assert!(c.residual <= 1e-3, "s={s} {id:?}: {:e}", c.residual);
            assert!(c.reliable);
        }
    }
    assert!((kernel_transform(0.0) - 1.0).abs() < 1e-8);
}

#[test]
fn division_forms_match_grid_transforms() {
    let f = long_grid();
    for s in [0.01, 0.1, 1.0] {
        let d = division_forms(s).unwrap();
        assert!(d.denominator > 0.0);
        let g0 = laplace_of_increments(&f, s, Weight::One, Tail::Reciprocal).unwrap().value;
        let g1 = laplace_of_increments(&f, s, Weight::T, Tail::Reciprocal).unwrap().value;
        let g2 = laplace_of_increments(&f, s, Weight::T2, Tail::Reciprocal).unwrap().value;
        assert!((d.density - g0).abs() < 1e-3, "s={s}");
        assert!((d.first_moment - g1).abs() < 1e-3, "s={s}");
        assert!(((d.second_moment - g2) / d.second_moment).abs() < 1e-3, "s={s}");
    }
}
