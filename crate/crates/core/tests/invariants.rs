use proptest::prelude::*;
use std::sync::Arc;
use warpbench_core::ledger::*;
use warpbench_core::offcenter::*;
use warpbench_core::radial::*;
use warpbench_core::transport::*;
use warpbench_core::*;

fn build(n: usize, p: WarpingProfile) -> ModelManifold {
    let g = GridSpec::for_profile(&p);
    build_manifold(n, p, g).unwrap()
}

fn slow() -> ProptestConfig {
    ProptestConfig { cases: 8, failure_persistence: None, ..ProptestConfig::default() }
}

proptest! {
    #![proptest_config(slow())]

    #[test]
    fn kato_is_scale_invariant(s in 0.5f64..2.0, amp in -0.3f64..0.3) {
        let p = WarpingProfile::perturbed(amp, 1.0).unwrap();
        let a = kato_constant(&build(3, p.clone())).unwrap().k_infty;
        let b = kato_constant(&build(3, p.scaled(s).unwrap())).unwrap().k_infty;
        prop_assert!((a - b).abs() <= 1e-9 * a.max(1e-12), "{a} vs {b}");
    }

    #[test]
    fn gauge_stays_in_sandwich(amp in -0.4f64..0.4, width in 0.5f64..1.5) {
        let m = build(3, WarpingProfile::perturbed(amp, width).unwrap());
        if let Ok(g) = gauge_solve(&m) {
            let gamma = 1.0 / (1.0 - g.k_infty);
            prop_assert!(g.phi.values().iter().all(|&p| (1.0..=gamma).contains(&p)));
            let sup = m.ric_minus().sup().max(1.0);
            prop_assert!(conformal_bakry_emery_check(&m, &g).unwrap() >= -1e-5 * sup);
        }
    }

    #[test]
    fn bishop_gromov_on_nonnegative_profiles(a in 0.2f64..1.0, r in 0.1f64..10.0, k in 1.1f64..20.0) {
        let m = build(3, WarpingProfile::cone(a).unwrap());
        let excess = m.bishop_gromov_check(r, r * k).unwrap();
        prop_assert!(excess <= 1e-9 * k.powi(3), "{excess}");
    }

    #[test]
    fn green_is_positive_and_decreasing(a in 0.3f64..1.0, n in 3usize..6) {
        let m = build(n, WarpingProfile::cone(a).unwrap());
        let g = green_pole(&m).unwrap();
        let v = g.g.values();
        prop_assert!(v.iter().all(|&x| x > 0.0));
        prop_assert!(v.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn euclidean_transport_is_sharp(radius in 0.2f64..5.0, frac in 0.0f64..0.99) {
        let m = Arc::new(build(3, WarpingProfile::euclidean()));
        let p = normalize_scaling(&WeightedBallProblem::unweighted(m, radius).unwrap()).unwrap();
        let again = normalize_scaling(&p).unwrap();
        prop_assert!((again.h_scale / p.h_scale - 1.0).abs() < 1e-12);
        let sol = solve_neumann_radial(&p).unwrap();
        let tr = transport_jacobian(&p, &sol, frac * radius, 4.0 * radius, 64).unwrap();
        for s in &tr.samples {
            prop_assert!((s.det_p / s.bound - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn jacobi_field_matches_warp_ratio(frac in 0.05f64..0.95, which in 0usize..2) {
        let prof = if which == 0 { WarpingProfile::hyperbolic(1.0).unwrap() } else { WarpingProfile::cone(0.5).unwrap() };
        let m = Arc::new(build(3, prof));
        let p = normalize_scaling(&WeightedBallProblem::unweighted(m.clone(), 1.0).unwrap()).unwrap();
        let sol = solve_neumann_radial(&p).unwrap();
        let x = frac;
        let tr = transport_jacobian(&p, &sol, x, 4.0, 256).unwrap();
        let s = sol.du_at(x);
        let a = sol.d2u_at(x);
        for smp in &tr.samples {
            let exact = (1.0 + a * smp.t) * (m.w(x + s * smp.t) / m.w(x)).powi(2);
            prop_assert!((smp.det_p / exact - 1.0).abs() < 1e-9);
            if which == 1 {
                prop_assert!(smp.det_p <= smp.bound * (1.0 + 1e-9));
            }
        }
    }

    #[test]
    fn eikonal_symmetry_and_triangle(r1 in 0.5f64..2.0, r2 in 0.5f64..2.0, psi in 0.1f64..3.0) {
        let m = build(3, WarpingProfile::cone(0.5).unwrap());
        let mesh = MeshSpec::full(256, 128, 6.0);
        let f1 = distance_field(&m, r1, mesh).unwrap();
        let f2 = distance_field(&m, r2, mesh).unwrap();
        let cell = mesh.hr().max(m.w(r1.max(r2)) * mesh.hpsi());
        let d12 = f1.eval(r2, psi).unwrap();
        let d21 = f2.eval(r1, psi).unwrap();
        prop_assert!((d12 - d21).abs() <= 2.0 * cell, "{d12} {d21}");
        // a -> c via b with b on the axis at r2
        let c = (1.5, psi / 2.0);
        let ac = f1.eval(c.0, c.1).unwrap();
        let bc = f2.eval(c.0, c.1).unwrap();
        let ab = f1.eval(r2, 0.0).unwrap();
        prop_assert!(ac <= ab + bc + 2.0 * cell);
    }

    #[test]
    fn pole_source_is_radial(a in 0.2f64..1.0) {
        let m = build(3, WarpingProfile::cone(a).unwrap());
        let f = distance_field(&m, 0.0, MeshSpec::full(256, 128, 4.0)).unwrap();
        for i in (0..256).step_by(31) {
            for j in (0..128).step_by(17) {
                prop_assert!((f.at(i, j) - f.mesh.r(i)).abs() < 1e-12);
            }
        }
    }
}

proptest! {
    #[test]
    fn green_bound_is_homogeneous(n in 3usize..8, r in 0.01f64..1.0, rp in 0.01f64..1.0, d in 0.0f64..10.0) {
        let c = Calibration::default();
        let q = green_bound(n, 0.0, 1.0, 1.0, d, r, &c).unwrap() / green_bound(n, 0.0, 1.0, 1.0, d, rp, &c).unwrap();
        prop_assert!((q / (r / rp).powf(2.0 - n as f64) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn covering_ell_is_radius_free(v0 in 0.1f64..1.0, extra in 0.0f64..3.0, n in 3usize..6, r in 0.2f64..50.0) {
        let (a, _) = covering_constants(n, v0, v0 + extra, r).unwrap();
        let (b, _) = covering_constants(n, v0, v0 + extra, 1.0).unwrap();
        prop_assert_eq!(a, b);
        prop_assert!(a > 0.0);
    }

    #[test]
    fn case_b_is_affine_with_tail_slope(b0 in 0.0f64..1.0, v0 in 0.5f64..5.0, n in 3usize..6) {
        let c = Calibration { c_green: 0.3, c_ab: 0.7, ..Calibration::default() };
        let k1 = kato_bound_case_b(n, 1.0, b0, v0, &c).unwrap();
        let k2 = kato_bound_case_b(n, 1.0, b0 + 0.5, v0, &c).unwrap();
        let slope = (k2 - k1) / 0.5;
        let inner = (n as f64 - 1.0) * c.c_green * 2.0 * c.c_ab * kato_case_b_inner(n, v0);
        prop_assert!(((slope - inner) / kato_case_b_tail_slope(n, v0, &c) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn case_a_decreases_with_k(k in 1e-6f64..1.0, n in 3usize..5) {
        let c = Calibration::default();
        let alpha = 3.0 * n as f64 + 0.5;
        let a = kato_bound_case_a(n, alpha, 1.0, 1.0, k, 2.0, &c).unwrap();
        let b = kato_bound_case_a(n, alpha, 1.0, 1.0, k / 2.0, 2.0, &c).unwrap();
        prop_assert!(b < a && b > 0.0);
    }

    #[test]
    fn meanvalue_scale_free(s in 0.01f64..100.0, k in 0.0f64..2.0, n in 3usize..6) {
        let c = Calibration { c_meanvalue: 1.3, ..Calibration::default() };
        let at = |s: f64| {
            let th = 9.0 * k / (s * s);
            meanvalue_constant(n, th, 2.0 * (n as f64 - 1.0) * th, s / 16.0, &c)
        };
        prop_assert!((at(s) / at(1.0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sobolev_identity(n in 3usize..8, beta in 0.01f64..10.0, t in 0.0f64..0.99) {
        let k = t / (n as f64 - 2.0);
        let s = sobolev_constants(n, beta, k).unwrap();
        let nf = n as f64;
        let alt = s.c2_limit * s.gamma.powf(-(4.0 * nf - 4.0) / (nf * (nf - 2.0)));
        prop_assert!((s.c_isoperimetric / alt - 1.0).abs() < 1e-12);
        prop_assert!(s.c_isoperimetric <= s.c2_limit);
    }

    #[test]
    fn isoperimetric_threshold_vanishes_at_gauge_limit(n in 3usize..7, beta in 0.1f64..5.0) {
        let k = (1.0 - 1e-12) / (n as f64 - 2.0);
        prop_assert!(isoperimetric_threshold(n, k, beta) < 1e-6 * isoperimetric_threshold(n, 0.0, beta));
    }

    #[test]
    fn euclidean_ball_volume_formula(n in 3usize..7, r in 0.01f64..100.0) {
        let m = build_manifold(n, WarpingProfile::euclidean(), GridSpec::default()).unwrap();
        let (v, a) = m.volume_and_area(r).unwrap();
        let om = m.omega();
        prop_assert!((v / (om * r.powi(n as i32) / n as f64) - 1.0).abs() < 1e-10);
        prop_assert!((a / (om * r.powi(n as i32 - 1)) - 1.0).abs() < 1e-12);
    }
}
