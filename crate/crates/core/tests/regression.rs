use warpbench_core::ledger::*;
use warpbench_core::offcenter::*;
use warpbench_core::*;

#[test]
fn case_a_middle_term_grows_like_delta_to_2n() {
    // The near-field mass tends to a constant, so it does not absorb the delta^(3n-2) growth.
    for n in [3usize, 4] {
        let alpha = 3.0 * n as f64 + 1.0;
        let a = kato_case_a_terms(n, alpha, 1.0, 100.0)[1];
        let b = kato_case_a_terms(n, alpha, 1.0, 1000.0)[1];
        let slope = (b / a).log10();
        assert!((slope - 2.0 * n as f64).abs() < 1e-6, "n = {n}: slope {slope}");
    }
}

#[test]
fn case_a_example_exceeds_one() {
    let c = Calibration::default();
    let k = kato_bound_case_a(3, 10.0, 1.0, 1.0, 1e-3, 4.0 * std::f64::consts::PI / 3.0, &c).unwrap();
    assert!(k > 1.0, "{k}");
}

#[test]
fn smoothed_cone_vc_ratio_settles_at_large_radius() {
    let p = WarpingProfile::cone(0.5).unwrap();
    let m = build_manifold(3, p.clone(), GridSpec::for_profile(&p)).unwrap();
    let rep = vc_check(&m, &[100.0, 200.0, 400.0], MIN_NR, MIN_NPSI).unwrap();
    eprintln!("{:?}", rep.samples);
    let (lo, hi) = rep.samples.iter().fold((f64::INFINITY, 0f64), |(l, h), s| (l.min(s.1), h.max(s.1)));
    assert!(hi / lo < 1.05, "{:?}", rep.samples);
    assert!(!rep.growing);
}
