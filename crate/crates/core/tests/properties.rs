use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

use skewlab::base::{BaseSystem, LinearAnosov};
use skewlab::config::RunConfig;
use skewlab::linalg::{qr_positive, subspace_distance};
use skewlab::profile::ShearProfile;
use skewlab::skew::{Mode, SkewPoint, SwitchTower};
use skewlab::splitting::{estimate_bundle, lyapunov_qr, BundleRequest, Direction};

fn cat(doubling: bool) -> SwitchTower {
    let p = ShearProfile::build(0.2, 0.4, 2.5, 0.9, 1, 1000).unwrap();
    SwitchTower::build(
        BaseSystem::Linear(LinearAnosov::cat_map()),
        vec![p],
        Mode::Diffeo,
        doubling,
        0.05,
    )
    .unwrap()
}

fn flow() -> SwitchTower {
    RunConfig::flow().construct().unwrap().tower
}

fn multi() -> SwitchTower {
    RunConfig::multi_switch().construct().unwrap().tower
}

fn distance(t: &SwitchTower, a: &SkewPoint, b: &SkewPoint) -> f64 {
    a.z.iter()
        .zip(&b.z)
        .map(|(x, y)| t.z_delta(*x, *y).abs())
        .fold(t.base().distance(&a.x, &b.x), f64::max)
}

/// Central-difference Jacobian in frame coordinates.
fn fd_jacobian(t: &SwitchTower, p: &SkewPoint, h: f64) -> DMatrix<f64> {
    let m = t.base_dim();
    let d = t.dim();
    let mut out = DMatrix::zeros(d, d);
    for j in 0..d {
        let shifted = |s: f64| {
            let mut q = p.clone();
            if j < m {
                let mut w = DVector::zeros(m);
                w[j] = s;
                q.x = t.base().advance(&p.x, &w);
            } else {
                q.z[j - m] += s;
            }
            t.apply(&q)
        };
        let (plus, minus) = (shifted(h), shifted(-h));
        let dx = t.base().frame_displacement(&minus.x, &plus.x);
        for i in 0..m {
            out[(i, j)] = dx[i] / (2.0 * h);
        }
        for k in 0..t.depth() {
            out[(m + k, j)] = t.z_delta(minus.z[k], plus.z[k]) / (2.0 * h);
        }
    }
    out
}

fn point(t: &SwitchTower, x: &[f64], z: &[f64]) -> SkewPoint {
    t.canonical(&SkewPoint::new(
        x[..t.base_dim()].to_vec(),
        z[..t.depth()].to_vec(),
    ))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn profile_is_a_contraction_below_the_diagonal(
        lambda in 0.05f64..0.3, eta in 0.35f64..0.9, mu in 1.5f64..4.0, z in 1e-6f64..(1.0 - 1e-6)
    ) {
        prop_assume!(lambda < eta);
        let a = 1.0 - 0.5 / mu;
        let p = ShearProfile::build(lambda, eta, mu, a, 1, 200).unwrap();
        prop_assert!(p.h(z) < z);
        prop_assert!(p.h_prime(z) >= lambda - 1e-12 && p.h_prime(z) <= mu + 1e-12);
        prop_assert!((p.h_inverse(p.h(z)) - z).abs() < 1e-10);
        prop_assert!(p.c < p.h3_a);
    }

    #[test]
    fn profile_derivatives_match_differences(z in 1e-4f64..(1.0 - 1e-4)) {
        let p = ShearProfile::build(0.1, 0.4, 2.5, 0.9, 2, 200).unwrap();
        let h = 1e-6;
        let d = |f: &dyn Fn(f64) -> f64| (f(z + h) - f(z - h)) / (2.0 * h);
        prop_assert!((d(&|z| p.h(z)) - p.h_prime(z)).abs() < 1e-5);
        prop_assert!((d(&|z| p.tau(z)) - p.tau_prime(z)).abs() < 1e-5);
        prop_assert!((d(&|z| p.rho(z)) - p.rho_prime(z)).abs() < 1e-5);
    }

    #[test]
    fn inverse_round_trip(x in prop::array::uniform3(0.0f64..1.0), z in prop::array::uniform2(-1.0f64..3.0)) {
        for t in [cat(false), cat(true), flow(), multi()] {
            let z0: Vec<f64> = z.iter().map(|v| if t.doubling() { *v } else { v.rem_euclid(2.0) - 1.0 }).collect();
            let p = point(&t, &x, &z0);
            prop_assert!(distance(&t, &t.inverse(&t.apply(&p)), &p) < 1e-10);
            prop_assert!(distance(&t, &t.apply(&t.inverse(&p)), &p) < 1e-10);
        }
    }

    #[test]
    fn derivative_matches_differences(x in prop::array::uniform3(0.0f64..1.0), z in prop::array::uniform2(-0.999f64..0.999)) {
        for t in [cat(false), flow(), multi()] {
            let p = point(&t, &x, &z);
            let exact = t.df_matrix(&p);
            let approx = fd_jacobian(&t, &p, 1e-6);
            let err = (&exact - &approx).amax() / exact.amax().max(1.0);
            prop_assert!(err < 1e-5, "{err}: {exact} vs {approx}");
        }
    }

    #[test]
    fn chain_rule_over_two_steps(x in prop::array::uniform2(0.0f64..1.0), z in -0.999f64..0.999) {
        let t = cat(false);
        let p = point(&t, &x, &[z]);
        let two = t.df_matrix(&t.apply(&p)) * t.df_matrix(&p);
        let q = t.apply(&t.apply(&p));
        let back = t.df_inverse_analytic(&t.apply(&p)).unwrap() * t.df_inverse_analytic(&q).unwrap();
        let id = DMatrix::<f64>::identity(3, 3);
        prop_assert!((two * back - id).amax() < 1e-9);
    }

    #[test]
    fn fiber_reflection_is_a_symmetry(x in prop::array::uniform2(0.0f64..1.0), z in 0.0f64..0.999) {
        let t = cat(false);
        let up = t.apply(&point(&t, &x, &[z]));
        let down = t.apply(&point(&t, &x, &[-z]));
        prop_assert!(t.base().distance(&up.x, &down.x) < 1e-15);
        prop_assert_eq!(up.z[0], -down.z[0]);
    }

    #[test]
    fn lyapunov_sum_matches_volume_growth(x in prop::array::uniform3(0.0f64..1.0), z in prop::array::uniform2(-1.0f64..1.0)) {
        for t in [cat(false), flow(), multi()] {
            let r = lyapunov_qr(&t, &point(&t, &x, &z), 300, 1).unwrap();
            prop_assert!(r.det_defect.abs() < 1e-8, "{}", r.det_defect);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    // Backward orbits pile up near z = ±1, where the vertical rate μ is
    // within 5% of the base unstable rate; 400 steps resolve E^u there.
    #[test]
    fn unstable_bundle_is_equivariant(x in prop::array::uniform2(0.0f64..1.0), z in -1.0f64..1.0) {
        let t = cat(false);
        let req = BundleRequest { dim: 1, direction: Direction::Forward, n: 400, seed: 3, tolerance: None };
        let p = point(&t, &x, &[z]);
        let here = estimate_bundle(&t, &p, req).unwrap();
        prop_assert!(here.residual < 1e-6, "{}", here.residual);
        let next = estimate_bundle(&t, &t.apply(&p), req).unwrap();
        let pushed = qr_positive(t.df_matrix(&p) * &here.basis).0;
        prop_assert!(subspace_distance(&pushed, &next.basis) < 1e-6);
    }
}
