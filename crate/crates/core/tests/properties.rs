//! Invariants that must hold at every admissible point, exercised at random ones.

use nalgebra::{DMatrix, DVector};
use obata_lab::diff::{coordinate_gradient, directional};
use obata_lab::profile::{calabi_function, CalabiProfile, H2_NAMES};
use obata_lab::scenario::{build_space, lookup, parse_config, Parameters, ScenarioConfig};
use obata_lab::{
    christoffel, eigenstructure_at_point, riemann_curvature, sectional_curvature, u_from_profile,
    DiffScheme, ModelSpace, Point,
};
use proptest::prelude::*;

const SPACES: [&str; 5] = [
    "dwp_sinh",
    "calabi_h2_one",
    "calabi_cauchy",
    "obata_sphere",
    "flat_cn",
];

fn space(name: &str) -> ModelSpace {
    build_space(lookup(name).unwrap(), &Parameters::default()).unwrap()
}

fn point_in(space: &ModelSpace, seed: u64) -> Point {
    space.sample_points(1, seed).unwrap().remove(0)
}

fn scheme() -> DiffScheme {
    DiffScheme::default()
}

fn unit(d: usize, i: usize) -> DVector<f64> {
    let mut v = DVector::zeros(d);
    v[i] = 1.0;
    v
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn christoffel_symbols_are_symmetric(which in 0..SPACES.len(), seed in any::<u64>()) {
        let s = space(SPACES[which]);
        let p = point_in(&s, seed);
        let gamma = christoffel(s.metric(), &p, &scheme()).unwrap();
        let d = s.dim();
        for k in 0..d {
            for i in 0..d {
                for j in 0..d {
                    prop_assert_eq!(gamma.get(k, i, j).to_bits(), gamma.get(k, j, i).to_bits());
                }
            }
        }
    }

    #[test]
    fn levi_civita_is_metric_compatible(which in 0..SPACES.len(), seed in any::<u64>()) {
        let s = space(SPACES[which]);
        let p = point_in(&s, seed);
        let g = s.metric().eval(&p);
        let gamma = christoffel(s.metric(), &p, &scheme()).unwrap();
        let d = s.dim();
        for k in 0..d {
            let dg: DMatrix<f64> = directional(|q: &Point| s.metric().eval(q), &p, k, &scheme()).unwrap();
            let gk = gamma.along(k);
            // ∂_k g_ij − Γ^l_{ki} g_lj − Γ^l_{kj} g_il
            let residual = &dg - gk.transpose() * &g - &g * &gk;
            prop_assert!(residual.amax() < 1e-6, "{} k={k}: {}", SPACES[which], residual.amax());
        }
    }

    #[test]
    fn riemann_antisymmetry_and_first_bianchi(which in 0..SPACES.len(), seed in any::<u64>()) {
        let s = space(SPACES[which]);
        let p = point_in(&s, seed);
        let riem = riemann_curvature(s.metric(), &p, &scheme()).unwrap();
        let d = s.dim();
        for a in 0..d {
            for b in 0..d {
                for c in 0..d {
                    let (x, y, z) = (unit(d, a), unit(d, b), unit(d, c));
                    let anti = riem.apply(&x, &y, &z) + riem.apply(&y, &x, &z);
                    prop_assert!(anti.amax() < 1e-6, "{}: antisymmetry {}", SPACES[which], anti.amax());
                    let bianchi = riem.apply(&x, &y, &z) + riem.apply(&y, &z, &x) + riem.apply(&z, &x, &y);
                    prop_assert!(bianchi.amax() < 1e-6, "{}: Bianchi {}", SPACES[which], bianchi.amax());
                }
            }
        }
    }

    #[test]
    fn homothety_keeps_connection_and_scales_curvature(which in 0..SPACES.len(), seed in any::<u64>()) {
        let s = space(SPACES[which]);
        let p = point_in(&s, seed);
        let c = 2.0;
        let scaled = s.metric().scaled(c);
        let g0 = christoffel(s.metric(), &p, &scheme()).unwrap().as_vector();
        let g1 = christoffel(&scaled, &p, &scheme()).unwrap().as_vector();
        prop_assert!((&g1 - &g0).amax() < 1e-6 * g0.amax().max(1.0));
        let (v, w) = (unit(s.dim(), 0), unit(s.dim(), 1));
        let k0 = sectional_curvature(s.metric(), &p, &v, &w, &scheme()).unwrap();
        let k1 = sectional_curvature(&scaled, &p, &v, &w, &scheme()).unwrap();
        prop_assert!((k1 - k0 / (c * c)).abs() < 1e-6 * k0.abs().max(1.0), "{k0} {k1}");
    }

    #[test]
    fn analytic_gradients_agree_with_differences(which in 0..3usize, seed in any::<u64>()) {
        let s = space(["dwp_sinh", "calabi_h2_one", "calabi_cauchy"][which]);
        let p = point_in(&s, seed);
        let analytic = coordinate_gradient(s.u(), &p, &scheme()).unwrap();
        let numeric = coordinate_gradient(s.u(), &p, &scheme().differences_only()).unwrap();
        prop_assert!((&analytic - &numeric).norm() <= 1e-8 * analytic.norm().max(1.0),
            "{} vs {}", analytic, numeric);
    }

    #[test]
    fn warped_gradient_matches_the_warp_factor(n in 1..=3usize, seed in any::<u64>()) {
        let c = ScenarioConfig::new("dwp_sinh").with_overrides(&[format!("parameters.n={n}")]).unwrap();
        let s = build_space(lookup("dwp_sinh").unwrap(), &c.parameters).unwrap();
        let p = point_in(&s, seed);
        let t = s.warp().unwrap().t_at(&p).unwrap();
        let u = s.u().eval(&p);
        prop_assert!((u - t.sinh().powi(2)).abs() < 1e-12 * u.max(1.0));
        let rep = eigenstructure_at_point(&s, &p, &scheme());
        // Real dimension 2 has no μ, but the gradient is still there.
        let grad_sq = match rep {
            Ok(r) => r.grad_norm_sq,
            Err(e) => return Err(TestCaseError::fail(e.to_string())),
        };
        let lhs = grad_sq / (4.0 * u * u);
        let rhs = (t.cosh() / t.sinh()).powi(2);
        prop_assert!((lhs - rhs).abs() < 1e-6 * rhs, "{lhs} {rhs}");
    }

    #[test]
    fn eigenstructure_scales_with_the_potential(which in 0..3usize, seed in any::<u64>()) {
        let s = space(["dwp_sinh", "calabi_h2_one", "calabi_cauchy"][which]);
        let scaled = s.clone().with_rescaled_potential(3.0, -1.0).unwrap();
        let p = point_in(&s, seed);
        let a = eigenstructure_at_point(&s, &p, &scheme()).unwrap();
        let b = eigenstructure_at_point(&scaled, &p, &scheme()).unwrap();
        let rel = |x: f64, y: f64| (x - y).abs() / y.abs().max(1.0);
        prop_assert!(rel(b.lambda_numeric, 3.0 * a.lambda_numeric) < 1e-9);
        prop_assert!(rel(b.mu_numeric.unwrap(), 3.0 * a.mu_numeric.unwrap()) < 1e-9);
        // Residuals are normalized by |grad u|, which also scales, so they can
        // only move at roundoff level.
        for (x, y) in [
            (a.grad_eigen_residual, b.grad_eigen_residual / 3.0),
            (a.jgrad_eigen_residual, b.jgrad_eigen_residual / 3.0),
            (a.mu_cluster_spread.unwrap(), b.mu_cluster_spread.unwrap() / 3.0),
        ] {
            prop_assert!((x - y).abs() < 1e-9, "{x} {y}");
        }
        prop_assert!((a.j_invariance - b.j_invariance / 3.0).abs() < 1e-9);
        let (ia, ib) = (a.identity_2umu_gap.unwrap(), b.identity_2umu_gap.unwrap());
        prop_assert!(ib < 1e-5 && ia < 1e-5, "{ia} {ib}");
    }

    #[test]
    fn rayleigh_quotient_matches_block_eigenvalue(which in 0..SPACES.len(), seed in any::<u64>()) {
        let s = space(SPACES[which]);
        let p = point_in(&s, seed);
        if let Ok(r) = eigenstructure_at_point(&s, &p, &scheme()) {
            prop_assert!((r.lambda_numeric - r.lambda_block).abs() < 1e-8 * r.lambda_numeric.abs().max(1.0),
                "{} {}", r.lambda_numeric, r.lambda_block);
        }
    }

    #[test]
    fn sampling_is_reproducible(which in 0..SPACES.len(), seed in any::<u64>(), count in 1..20usize) {
        let s = space(SPACES[which]);
        let a = s.sample_points(count, seed).unwrap();
        let b = s.sample_points(count, seed).unwrap();
        prop_assert_eq!(a.len(), count);
        for (x, y) in a.iter().zip(&b) {
            prop_assert!(s.is_admissible(x));
            prop_assert_eq!(x.to_vec(), y.to_vec());
        }
    }

    #[test]
    fn configs_survive_a_toml_round_trip(
        samples in 1..=100_000usize,
        seed in any::<u64>(),
        step_exp in -7.0..-2.0f64,
        richardson in 1..=4u32,
        which in 0..9usize,
    ) {
        let mut c = ScenarioConfig::new(obata_lab::scenario::SCENARIOS[which].name);
        c.samples = samples;
        c.seed = seed;
        c.fd_step = 10f64.powf(step_exp);
        c.richardson = richardson;
        prop_assert_eq!(parse_config(&c.to_toml()).unwrap(), c);
    }
}

#[test]
fn potentials_increase_along_every_stored_profile() {
    for h2 in H2_NAMES {
        let profile = CalabiProfile::new(
            calabi_function("h1_one").unwrap(),
            calabi_function(h2).unwrap(),
            0.0,
            5.0,
        )
        .unwrap();
        let grid: Vec<f64> = (0..50).map(|i| 5.0 * i as f64 / 49.0).collect();
        let values: Vec<f64> = grid
            .iter()
            .map(|r| u_from_profile(&profile, *r).unwrap())
            .collect();
        assert_eq!(values[0], 0.0);
        for w in values.windows(2) {
            assert!(w[1] > w[0], "{h2}: {w:?}");
        }
    }
}
