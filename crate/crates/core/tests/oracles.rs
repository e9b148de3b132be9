//! Worked examples against values computed independently of the code under test.

use nalgebra::DVector;
use obata_lab::kahler::chern_curvature_residual;
use obata_lab::model::{
    calabi_line_bundle_chart, dwp_punctured_space, flat_calabi_product, flat_cn, fubini_study_form,
    horizontal_frame, CalabiOptions, DwpOptions,
};
use obata_lab::profile::{calabi_function, warp_function, CalabiProfile, RadialFn, WarpProfile};
use obata_lab::scenario::{build_space, Parameters, SCENARIOS};
use obata_lab::verify::{killing_residual, verify_scenario, VerifyPlan};
use obata_lab::{
    compare_closed_forms, eigenstructure_at_point, mu_u_gradient_identity, second_fundamental_form,
    Check, DiffScheme, GeomError, ModelSpace, Point, ScalarField,
};

fn pt(c: &[f64]) -> Point {
    Point::new(c.to_vec()).unwrap()
}

fn scheme() -> DiffScheme {
    DiffScheme::default()
}

fn calabi_h2_one() -> ModelSpace {
    let profile = CalabiProfile::new(
        calabi_function("h1_one_plus_r2").unwrap(),
        calabi_function("h2_one").unwrap(),
        -2.0,
        3.0,
    )
    .unwrap();
    calabi_line_bundle_chart(profile, 2, CalabiOptions::default()).unwrap()
}

fn dwp(rho: &str, n: usize) -> ModelSpace {
    dwp_punctured_space(
        WarpProfile::new(warp_function(rho).unwrap()),
        n,
        DwpOptions::default(),
    )
    .unwrap()
}

/// Chart point at Calabi radius `r` above base point `w`, for degree 2.
fn calabi_point(w: (f64, f64), r: f64, phase: f64) -> Point {
    let q: f64 = 1.0 + w.0 * w.0 + w.1 * w.1;
    let z = r / q; // r = |z| q^{k/2} with k = 2
    pt(&[w.0, w.1, z * phase.cos(), z * phase.sin()])
}

#[test]
fn flat_c2_has_both_eigenvalues_two() {
    let space = flat_cn(2, 0.1, 2.0).unwrap();
    let rep = eigenstructure_at_point(&space, &pt(&[0.3, -0.5, 0.7, 0.2]), &scheme()).unwrap();
    assert!((rep.lambda_numeric - 2.0).abs() < 1e-8);
    assert!((rep.mu_numeric.unwrap() - 2.0).abs() < 1e-8);
    for r in [
        rep.grad_eigen_residual,
        rep.jgrad_eigen_residual,
        rep.mu_cluster_spread.unwrap(),
        rep.j_invariance,
    ] {
        assert!(r < 1e-8, "{r}");
    }
    assert!(rep.closed_form_gaps.unwrap().isotropic);
}

#[test]
fn flat_calabi_product_has_mu_zero() {
    let space = flat_calabi_product(calabi_function("h2_one").unwrap(), 2, 0.1, 3.0).unwrap();
    let p = pt(&[2.0, 0.0, 0.3, -0.4]);
    let rep = eigenstructure_at_point(&space, &p, &scheme()).unwrap();
    assert!(
        (rep.lambda_numeric - 1.0).abs() < 1e-6,
        "{}",
        rep.lambda_numeric
    );
    assert!(rep.mu_numeric.unwrap().abs() < 1e-6);
    assert!(rep.mu_cluster_spread.unwrap() < 1e-6);
    // 2uμ = |∇u|² cannot hold with μ = 0; the gap is |∇u|² = r² normalized by max(1, r²).
    let gap = mu_u_gradient_identity(&space, &p, &scheme()).unwrap();
    assert!((gap - 1.0).abs() < 1e-6, "{gap}");
}

#[test]
fn calabi_h2_one_at_unit_radius() {
    let space = calabi_h2_one();
    for (w, phase) in [((0.0, 0.0), 0.0), ((0.4, -0.2), 1.0), ((-1.0, 0.5), 2.5)] {
        let rep = eigenstructure_at_point(&space, &calabi_point(w, 1.0, phase), &scheme()).unwrap();
        assert!(
            (rep.lambda_numeric - 1.0).abs() < 1e-6,
            "{}",
            rep.lambda_numeric
        );
        assert!(
            (rep.mu_numeric.unwrap() - 0.5).abs() < 1e-6,
            "{:?}",
            rep.mu_numeric
        );
        let (dl, dm) = compare_closed_forms(&space, &rep).unwrap();
        assert!(dl < 1e-4 && dm.unwrap() < 1e-4);
    }
}

#[test]
fn exponential_fiber_lambda_changes_sign() {
    // h₂ = e^{−r}: λ = 1 + r h₂′/(2h₂) = 1 − r/2.
    let space = flat_calabi_product(calabi_function("h2_exp").unwrap(), 2, 0.1, 3.0).unwrap();
    for r in [1.5, 1.9, 2.0, 2.1, 2.8] {
        let rep = eigenstructure_at_point(&space, &pt(&[r, 0.0, 0.1, 0.2]), &scheme()).unwrap();
        assert!(
            (rep.lambda_numeric - (1.0 - r / 2.0)).abs() < 1e-5,
            "r = {r}: {}",
            rep.lambda_numeric
        );
        assert!(rep.grad_eigen_residual < 1e-5);
    }
}

#[test]
fn identity_on_warped_spaces() {
    let flat = dwp("rho_linear", 2);
    assert!(mu_u_gradient_identity(&flat, &pt(&[0.4, 0.1, -0.3, 0.6]), &scheme()).unwrap() < 1e-9);
    // s(1) = 1, so |x| = 1 is t = 1.
    let sinh = dwp("rho_sinh", 2);
    assert!(mu_u_gradient_identity(&sinh, &pt(&[0.5, 0.5, 0.5, 0.5]), &scheme()).unwrap() < 1e-5);
}

#[test]
fn warped_closed_forms_at_unit_parameter() {
    let space = dwp("rho_sinh", 2);
    let rep = eigenstructure_at_point(&space, &pt(&[0.5, -0.5, 0.5, 0.5]), &scheme()).unwrap();
    // λ = (sinh²)″ = 2cosh 2, μ = 2cosh² at t = 1.
    let (s, c) = (1f64.sinh(), 1f64.cosh());
    assert!((rep.lambda_numeric - 2.0 * (c * c + s * s)).abs() < 1e-6);
    assert!((rep.mu_numeric.unwrap() - 2.0 * c * c).abs() < 1e-6);
    let (dl, dm) = compare_closed_forms(&space, &rep).unwrap();
    assert!(dl < 1e-4 && dm.unwrap() < 1e-4);
}

#[test]
fn level_set_curvature_on_warped_space() {
    // Horizontal g-unit X: II(X, X) = −μ/|∇u| = −2cosh²/(2 sinh cosh) = −coth 1 at t = 1.
    let space = dwp("rho_sinh", 2);
    let p = pt(&[0.5, -0.5, 0.5, 0.5]);
    let (z, _, _) = horizontal_frame(&p).unwrap();
    let g = space.metric().eval(&p);
    let x: DVector<f64> = &z / (z.transpose() * &g * &z)[(0, 0)].sqrt();
    let ii = second_fundamental_form(space.metric(), space.u(), &p, &x, &x, &scheme()).unwrap();
    assert!((ii + 1.0 / 1f64.tanh()).abs() < 1e-6, "{ii}");
}

#[test]
fn perturbed_fiber_opens_a_lambda_gap() {
    let nominal = calabi_h2_one();
    let bumped = RadialFn::new(
        "h2_bumped",
        (f64::NEG_INFINITY, f64::INFINITY),
        2,
        |r, k| match k {
            0 => 1.0 + 0.1 * r * r,
            1 => 0.2 * r,
            2 => 0.2,
            _ => 0.0,
        },
    );
    let profile = CalabiProfile::new_unchecked(
        calabi_function("h1_one_plus_r2").unwrap(),
        bumped,
        -2.0,
        3.0,
    )
    .unwrap();
    let broken = calabi_line_bundle_chart(profile, 2, CalabiOptions::default())
        .unwrap()
        .with_closed_forms(nominal.closed_forms().unwrap().clone());
    let rep =
        eigenstructure_at_point(&broken, &calabi_point((0.2, 0.1), 1.5, 0.3), &scheme()).unwrap();
    let (dl, _) = compare_closed_forms(&broken, &rep).unwrap();
    assert!(dl > 1e-2, "{dl}");
}

#[test]
fn j_gradient_is_killing_on_calabi_charts() {
    let space = calabi_h2_one();
    for (w, r) in [((0.0, 0.0), 0.5), ((0.7, -0.4), 1.2), ((-1.1, 0.3), 1.9)] {
        let k = killing_residual(&space, &calabi_point(w, r, 0.7), &scheme()).unwrap();
        assert!(k < 1e-5, "{k}");
    }
}

#[test]
fn chern_residual_is_linear_in_the_error_of_l() {
    let weight = ScalarField::new(|p| (1.0 + p[0] * p[0] + p[1] * p[1]).powi(2));
    let omega = fubini_study_form();
    for c in [[0.0, 0.0], [0.5, -0.3], [1.5, 1.0]] {
        let p = pt(&c);
        let right = chern_curvature_residual(&weight, -2.0, &omega, &p, &scheme()).unwrap();
        let wrong = chern_curvature_residual(&weight, -4.0, &omega, &p, &scheme()).unwrap();
        assert!(right < 1e-6, "{right}");
        assert!(wrong >= 0.1 * 4.0 * omega.eval(&p).norm(), "{wrong}");
    }
}

#[test]
fn conforming_scenarios_pass_and_controls_fail_loudly() {
    for entry in &SCENARIOS {
        let space = build_space(entry, &Parameters::default()).unwrap();
        let verdict = verify_scenario(&space, &VerifyPlan::new(30, 7), &scheme()).unwrap();
        if entry.negative_control {
            assert!(!verdict.pass, "{}", entry.name);
            let tripped = verdict.checks.values().any(|s| s.worst > 1e-2);
            assert!(tripped, "{}: no residual above 1e-2", entry.name);
        } else {
            assert!(
                verdict.pass,
                "{}: {:?}",
                entry.name,
                verdict.failures.first()
            );
            assert_eq!(verdict.points_sampled, 30);
        }
    }
}

#[test]
fn closedness_and_parallel_j_fail_together() {
    for (name, expect_kahler) in [
        ("dwp_sinh", true),
        ("calabi_cauchy", true),
        ("neg_sigma_mismatch", false),
        ("neg_broken_ode", false),
    ] {
        let entry = obata_lab::scenario::lookup(name).unwrap();
        let space = build_space(entry, &Parameters::default()).unwrap();
        let mut plan = VerifyPlan::new(20, 3);
        plan.checks = Some(vec![Check::DOmega, Check::NablaJ]);
        let v = verify_scenario(&space, &plan, &scheme()).unwrap();
        let (d_omega, nabla_j) = (
            v.checks[&Check::DOmega].worst,
            v.checks[&Check::NablaJ].worst,
        );
        if expect_kahler {
            assert!(
                d_omega < 1e-5 && nabla_j < 1e-4,
                "{name}: {d_omega} {nabla_j}"
            );
        } else {
            assert!(
                d_omega > 1e-2 && nabla_j > 1e-2,
                "{name}: {d_omega} {nabla_j}"
            );
        }
    }
}

#[test]
fn critical_points_are_reported() {
    let space = flat_cn(2, 0.1, 2.0).unwrap();
    let tiny = pt(&[1e-12, 0.0, 0.0, 0.0]);
    assert!(matches!(
        eigenstructure_at_point(&space, &tiny, &scheme()),
        Err(GeomError::CriticalPoint { .. })
    ));
}
