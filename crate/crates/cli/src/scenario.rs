//! Command implementations.

use crate::config::{Command, Scenario, SweepKind};
use crate::report::{calibration_tag, num, prov, Provenance, Report, Table};
use rayon::prelude::*;
use std::sync::Arc;
use warpbench_core::ledger::{self, Calibration};
use warpbench_core::offcenter::{self, MIN_NPSI, MIN_NR};
use warpbench_core::radial::{self, kato_constant};
use warpbench_core::transport::{self, SamplingPolicy};
use warpbench_core::{Error, ModelManifold, RadialFn, Result, WeightedBallProblem};

const CURVATURE: Provenance = prov("geometry_core.curvature_envelope", "Ricci of a warped product");
const KATO: Provenance = prov("radial_analysis.kato_constant", "elliptic Kato constant");
const GAUGE: Provenance = prov("radial_analysis.gauge_solve", "gauge sandwich");
const CONFORMAL: Provenance = prov("radial_analysis.conformal_bakry_emery_check", "conformal Bakry-Emery non-negativity");
const ISO: Provenance = prov("abp_transport.isoperimetric_check", "isoperimetric constant");
const JACOBIAN: Provenance = prov("abp_transport.transport_jacobian", "transport Jacobian bound");
const RICCATI: Provenance = prov("abp_transport.riccati_residual", "Riccati comparison");
const SURJECT: Provenance = prov("abp_transport.surjectivity_check", "transport covers the ball");
const SOBOLEV: Provenance = prov("abp_transport.weighted_sobolev_check", "weighted Sobolev inequality");
const GREEN: Provenance = prov("constant_ledger.green_bound", "two-sided Green bound");
const ENERGY: Provenance = prov("radial_analysis.energy_identity_check", "Green energy identity");
const LI_YAU: Provenance = prov("radial_analysis.li_yau_check", "Li-Yau Green estimate");
const DOMINANCE: Provenance = prov("constant_ledger.dominance_check", "Kato bound dominance");
const AHLFORS: Provenance = prov("offcenter_geometry.ahlfors_check", "Ahlfors regularity");
const VC: Provenance = prov("offcenter_geometry.vc_check", "volume comparison between balls");
const COVERING: Provenance = prov("offcenter_geometry.covering_count_empirical", "covering lemma");
const BISECT_A: Provenance = prov("constant_ledger.kato_bound_case_a", "power-decay Kato threshold");
const BISECT_B: Provenance = prov("constant_ledger.kato_bound_case_b", "decay-budget Kato threshold");

const CONFORMAL_TOL: f64 = 1e-5;
const CURVATURE_ROWS: usize = 256;

/// Runs `s` and returns the finished report. Module errors do not escape:
/// they terminate the scenario and set the exit code.
pub fn run_scenario(s: &Scenario) -> Report {
    let table = Table::new(columns(s));
    let m = match s.build_manifold() {
        Ok(m) => m,
        Err(e) => {
            let mut r = Report::new(&s.name, s.command.as_str(), String::new(), s.manifold.n, s.tol, s.calibration, table);
            r.finish(Err(e));
            return r;
        }
    };
    let mut r = Report::new(&s.name, s.command.as_str(), m.profile().descriptor(), m.n(), s.tol, s.calibration, table);
    let out = match s.command {
        Command::ReportCurvature => report_curvature(s, &m, &mut r),
        Command::ReportKato => report_kato(s, &m, &mut r),
        Command::VerifyIsoperimetric => verify_isoperimetric(s, &m, &mut r),
        Command::VerifyAbp => verify_abp(s, Arc::new(m), &mut r),
        Command::VerifyGreenBounds => verify_green_bounds(s, &m, &mut r),
        Command::VerifyOffcenter => verify_offcenter(s, &m, &mut r),
        Command::Sweep => sweep(s, &m, &mut r),
    };
    r.finish(out);
    r
}

fn columns(s: &Scenario) -> &'static [&'static str] {
    match s.command {
        Command::ReportCurvature => &["r", "ric_radial", "ric_tangential", "ric_minus", "lambda"],
        Command::ReportKato => &["r", "kato_potential", "phi", "ric_minus"],
        Command::VerifyIsoperimetric => &["radius", "ratio", "threshold", "margin", "pass"],
        Command::VerifyAbp => &["radius", "x_bar", "max_det_over_bound", "max_riccati", "conjugate_t", "pass"],
        Command::VerifyGreenBounds => &["quantity", "delta", "r", "exact", "bound", "ratio", "pass"],
        Command::VerifyOffcenter => &["center", "radius", "volume_over_rn"],
        Command::Sweep => match s.params.sweep {
            Some(SweepKind::Radius) | None => &["radius", "target", "margin", "pass"],
            Some(_) => &["step", "phase", "lo", "hi", "c1_lo", "c1_hi", "monotone"],
        },
    }
}

fn stride_for(s: &Scenario, len: usize) -> usize {
    s.params.stride.unwrap_or_else(|| len.div_ceil(CURVATURE_ROWS).max(1))
}

fn report_curvature(s: &Scenario, m: &ModelManifold, r: &mut Report) -> Result<()> {
    let env = m.curvature_envelope()?;
    let nodes = m.grid().nodes();
    let step = stride_for(s, nodes.len());
    for i in (0..nodes.len()).step_by(step) {
        let cells = vec![
            num(nodes[i]),
            num(env.ric_radial.values()[i]),
            num(env.ric_tangential.values()[i]),
            num(env.ric_minus.values()[i]),
            num(env.lambda.values()[i]),
        ];
        r.table.push(cells, CURVATURE, "none");
    }
    r.value("K", env.k);
    r.value("alpha", env.alpha);
    r.value("b0", env.b0);
    r.value("lambda_at_pole", env.lambda_at_pole);
    r.value("sup_ric_minus", env.ric_minus.sup());
    r.value("nonparabolic", m.nonparabolic());
    Ok(())
}

/// `kato_constant`, with a divergent potential reported as not gaugeable.
fn kato(m: &ModelManifold) -> Result<radial::KatoReport> {
    match kato_constant(m) {
        Err(Error::Divergent(_)) => Err(Error::NotGaugeable(f64::INFINITY)),
        other => other,
    }
}

fn gauge_gate(m: &ModelManifold, r: &mut Report) -> Result<f64> {
    let k = kato(m)?;
    r.value("k_infty", k.k_infty);
    r.value("gamma", k.gamma);
    let lam = (m.n() - 2) as f64 * k.k_infty;
    if !k.gauge_feasible {
        return Err(Error::NotGaugeable(lam));
    }
    Ok(k.k_infty)
}

fn report_kato(s: &Scenario, m: &ModelManifold, r: &mut Report) -> Result<()> {
    let k = kato(m)?;
    r.value("k_infty", k.k_infty);
    r.value("argmax_radius", k.argmax_radius);
    r.value("gamma", k.gamma);
    r.value("gauge_feasible", k.gauge_feasible);
    if !k.gauge_feasible {
        return Err(Error::NotGaugeable((m.n() - 2) as f64 * k.k_infty));
    }
    let g = radial::gauge_solve(m)?;
    let sup = m.ric_minus().sup();
    let violations = g.phi.values().iter().filter(|&&p| !(1.0..=g.gamma).contains(&p)).count();
    r.value("gauge_iterations", g.iterations as u64);
    r.value("gauge_residual", g.residual);
    r.value("sup_ric_minus", sup);
    r.check("gauge sandwich violations", violations == 0, violations as f64, 0.0, GAUGE);
    r.check("gauge residual", g.residual <= s.tol * sup.max(f64::MIN_POSITIVE), g.residual, s.tol * sup, GAUGE);
    let be = radial::conformal_bakry_emery_check(m, &g)?;
    r.check("conformal min eigenvalue", be >= -CONFORMAL_TOL * sup, be, -CONFORMAL_TOL * sup, CONFORMAL);
    let nodes = m.grid().nodes();
    let step = stride_for(s, nodes.len());
    let rm = m.ric_minus_nodes();
    for i in (0..nodes.len()).step_by(step) {
        let cells = vec![num(nodes[i]), num(k.u.values()[i]), num(g.phi.values()[i]), num(rm[i])];
        r.table.push(cells, KATO, "none");
    }
    Ok(())
}

fn iso_radii(s: &Scenario) -> Vec<f64> {
    s.params.radii.clone().unwrap_or_else(|| vec![0.5, 1.0, 2.0, 5.0, 10.0])
}

struct IsoRow {
    radius: f64,
    ratio: f64,
    threshold: f64,
    margin: f64,
    pass: bool,
}

fn iso_row(m: &ModelManifold, radius: f64, k: f64, beta: f64, tol: f64) -> Result<IsoRow> {
    let c = transport::isoperimetric_check_with(m, radius, k, beta)?;
    let margin = c.ratio / c.threshold - 1.0;
    Ok(IsoRow { radius, ratio: c.ratio, threshold: c.threshold, margin, pass: margin >= -tol })
}

fn verify_isoperimetric(s: &Scenario, m: &ModelManifold, r: &mut Report) -> Result<()> {
    let k = gauge_gate(m, r)?;
    let beta = m.asymptotic_volume_ratio()?;
    r.value("beta", beta);
    r.value("threshold", transport::isoperimetric_threshold(m.n(), k, beta));
    let rows: Vec<Result<IsoRow>> = iso_radii(s).par_iter().map(|&rad| iso_row(m, rad, k, beta, s.tol)).collect();
    for row in rows {
        let row = row?;
        r.check(format!("isoperimetric R={}", num(row.radius)), row.pass, row.margin, -s.tol, ISO);
        let cells = vec![num(row.radius), num(row.ratio), num(row.threshold), num(row.margin), row.pass.to_string()];
        r.table.push(cells, ISO, "none");
    }
    Ok(())
}

fn policy(s: &Scenario) -> SamplingPolicy {
    let d = SamplingPolicy::default();
    SamplingPolicy { start_radii: s.params.start_radii.unwrap_or(d.start_radii), steps: s.params.steps.unwrap_or(d.steps), ..d }
}

struct AbpRun {
    radius: f64,
    rows: Vec<(f64, f64, f64, Option<f64>)>,
    violations: usize,
    max_riccati: f64,
    surjectivity: f64,
    sobolev: Option<transport::SobolevCheck>,
}

impl AbpRun {
    /// Worst relative slack `1 - det/bound` over all samples.
    fn margin(&self) -> f64 {
        self.rows.iter().map(|r| 1.0 - r.1).fold(f64::INFINITY, f64::min)
    }
}

fn abp_run(s: &Scenario, m: &Arc<ModelManifold>, radius: f64) -> Result<AbpRun> {
    let f = s.params.weight.clone().unwrap_or(RadialFn::Zero);
    let h = s.params.data.clone().unwrap_or(RadialFn::constant(1.0));
    let p = WeightedBallProblem::new(m.clone(), radius, f, h)?;
    let res = transport::run_transport(&p, policy(s))?;
    let starts = res.neumann.start_radii(policy(s).start_radii);
    let mut rows = Vec::with_capacity(starts.len());
    for (i, &x) in starts.iter().enumerate() {
        let worst = res
            .jacobian_samples
            .iter()
            .filter(|j| j.x_bar == x && j.det_p > 0.0)
            .map(|j| j.det_p / j.bound)
            .fold(0.0, f64::max);
        let conj = res.conjugate_points.iter().find(|c| c.0 == x).map(|c| c.1);
        rows.push((x, worst, res.riccati_residuals[i], conj));
    }
    let max_riccati = res.riccati_residuals.iter().cloned().fold(0.0, f64::max);
    Ok(AbpRun { radius, rows, violations: res.violations, max_riccati, surjectivity: res.surjectivity_margin, sobolev: res.sobolev })
}

fn abp_pass(run: &AbpRun, tol: f64) -> bool {
    run.violations == 0 && run.max_riccati <= tol && run.surjectivity >= 0.0 && run.sobolev.is_none_or(|c| c.pass)
}

fn verify_abp(s: &Scenario, m: Arc<ModelManifold>, r: &mut Report) -> Result<()> {
    gauge_gate(&m, r)?;
    let radii = s.params.radii.clone().unwrap_or_else(|| vec![1.0]);
    let runs: Vec<Result<AbpRun>> = radii.par_iter().map(|&rad| abp_run(s, &m, rad)).collect();
    for run in runs {
        let run = run?;
        let tag = num(run.radius);
        let ok_riccati = run.max_riccati <= s.tol;
        r.check(format!("jacobian violations R={tag}"), run.violations == 0, run.violations as f64, 0.0, JACOBIAN);
        r.check(format!("riccati residual R={tag}"), ok_riccati, run.max_riccati, s.tol, RICCATI);
        r.check(format!("surjectivity margin R={tag}"), run.surjectivity >= 0.0, run.surjectivity, 0.0, SURJECT);
        match run.sobolev {
            Some(c) => {
                r.check(format!("weighted sobolev R={tag}"), c.pass, c.lhs / c.rhs, 1.0, SOBOLEV);
            }
            None => r.value(&format!("sobolev_skipped_R={tag}"), true),
        }
        for &(x, worst, ric, conj) in &run.rows {
            let pass = worst <= 1.0 + 1e-9 && ric <= s.tol;
            let cells =
                vec![tag.clone(), num(x), num(worst), num(ric), conj.map(num).unwrap_or_default(), pass.to_string()];
            r.table.push(cells, JACOBIAN, "none");
        }
    }
    Ok(())
}

fn verify_green_bounds(s: &Scenario, m: &ModelManifold, r: &mut Report) -> Result<()> {
    if !m.nonparabolic() {
        return Err(Error::Parabolic);
    }
    let li = radial::li_yau_check(m)?;
    r.value("li_yau_constant", li.implied_constant);
    r.value("li_yau_spread", li.spread());
    let bounded = li.min_ratio > 0.0 && li.implied_constant.is_finite();
    r.check("li-yau comparability", bounded, li.min_ratio, 0.0, LI_YAU);
    let radii = s.params.radii.clone().unwrap_or_else(|| vec![0.1, 1.0, 10.0]);
    for &rad in &radii {
        let e = radial::energy_identity_check(m, rad)?;
        let tag = num(rad);
        let ok = e.identity_error() <= s.tol;
        r.check(format!("energy identity r={tag}"), ok, e.identity_error(), s.tol, ENERGY);
        r.check(format!("energy bound r={tag}"), e.energy <= e.bound, e.energy / e.bound, 1.0, ENERGY);
        let cells =
            vec!["energy".into(), String::new(), tag, num(e.green), num(e.energy), num(e.energy / e.green), ok.to_string()];
        r.table.push(cells, ENERGY, "none");
    }
    let d = ledger::dominance_check(m, &s.calibration)?;
    let at = s.calibration.with_green(d.c_star);
    let tag = calibration_tag(&at);
    let n = m.n();
    for &delta in &ledger::DOMINANCE_DELTAS {
        for rad in ledger::dominance_radii() {
            let exact = m.green_value(rad)?;
            let b = ledger::green_bound(n, 0.0, 1.0, 1.0, delta, rad, &at)?;
            let ok = b >= exact * (1.0 - 1e-12);
            let cells = vec!["green".into(), num(delta), num(rad), num(exact), num(b), num(b / exact), ok.to_string()];
            r.table.push(cells, GREEN, &tag);
        }
    }
    for (name, b) in [("kato_case_a", d.kato_case_a), ("kato_case_b", d.kato_case_b)] {
        if let Some(b) = b {
            let cells =
                vec![name.into(), String::new(), String::new(), num(d.kato_exact), num(b), num(b / d.kato_exact), "true".into()];
            r.table.push(cells, DOMINANCE, &tag);
        }
    }
    r.check("green bound dominance", d.green_min_ratio >= 1.0 - 1e-12, d.green_min_ratio, 1.0, GREEN);
    let target = 1.0 / (n as f64 - 2.0);
    let c1a = ledger::kato_bound_case_a(n, d.alpha, 1.0, 1.0, d.k_tilde, d.v0, &at)?;
    let c1b = ledger::kato_bound_case_b(n, 1.0, d.b0_tilde, d.v0, &at)?;
    r.check("K tilde witness", c1a < target, c1a, target, BISECT_A);
    r.check("b0 tilde witness", c1b < target, c1b, target, BISECT_B);
    r.value("c_star", d.c_star);
    r.value("kato_exact", d.kato_exact);
    r.value("kato_case_a", d.kato_case_a);
    r.value("kato_case_b", d.kato_case_b);
    r.value("k_decay", d.k_decay);
    r.value("alpha", d.alpha);
    r.value("v0", d.v0);
    r.value("exponent_r", d.exponent_r);
    r.value("exponent_delta", d.exponent_delta);
    r.value("k_tilde", d.k_tilde);
    r.value("b0_tilde", d.b0_tilde);
    let l = ledger::ledger_for_manifold(m, &at)?;
    r.attachments.push(("ledger.json".into(), l.to_json() + "\n"));
    Ok(())
}

fn verify_offcenter(s: &Scenario, m: &ModelManifold, r: &mut Report) -> Result<()> {
    let [nr, npsi] = s.params.mesh.unwrap_or([2 * MIN_NR, 2 * MIN_NPSI]);
    let centers = s.params.centers.clone().unwrap_or_else(|| offcenter::DEFAULT_CENTERS.to_vec());
    let radii = s.params.radii.clone().unwrap_or_else(|| offcenter::DEFAULT_RADII.to_vec());
    let a = offcenter::ahlfors_check(m, &centers, &radii, nr, npsi)?;
    for &(c, rad, q) in &a.samples {
        r.table.push(vec![num(c), num(rad), num(q)], AHLFORS, "none");
    }
    r.value("v0_empirical", a.v0_emp);
    r.value("v0_upper", a.v0_upper);
    r.value("xi_empirical", a.xi_emp);
    r.value("spread", a.spread());
    r.check("volume growth within limit", !a.growth_flag, a.spread(), offcenter::GROWTH_LIMIT, VC);
    r.check("ahlfors regular", a.regular(), a.v0_emp, 0.0, AHLFORS);
    let count = offcenter::covering_count_empirical(m, 1.0, 2.0, 0.25, nr, npsi)?;
    let bound = ledger::covering_bound(a.v0_emp, a.v0_upper, 0.25, 2.0, m.n())?;
    r.value("covering_count", count as u64);
    r.value("covering_bound", bound);
    r.check("covering count", count as f64 <= bound, count as f64, bound, COVERING);
    Ok(())
}

fn sweep(s: &Scenario, m: &ModelManifold, r: &mut Report) -> Result<()> {
    match s.params.sweep {
        Some(SweepKind::Radius) => radius_sweep(s, m, r),
        Some(SweepKind::KTilde) => threshold_sweep(s, m, r, true),
        Some(SweepKind::B0Tilde) => threshold_sweep(s, m, r, false),
        None => Err(Error::ConfigError("sweep kind missing".into())),
    }
}

fn radius_sweep(s: &Scenario, m: &ModelManifold, r: &mut Report) -> Result<()> {
    let radii = s.params.radii.clone().unwrap_or_default();
    if radii.is_empty() {
        return Err(Error::ConfigError("sweep grid is empty".into()));
    }
    let target = s.params.target.unwrap_or(Command::VerifyIsoperimetric);
    let k = gauge_gate(m, r)?;
    let rows: Vec<Result<(f64, f64, bool)>> = match target {
        Command::VerifyIsoperimetric => {
            let beta = m.asymptotic_volume_ratio()?;
            radii
                .par_iter()
                .map(|&rad| iso_row(m, rad, k, beta, s.tol).map(|row| (rad, row.margin, row.pass)))
                .collect()
        }
        Command::VerifyAbp => {
            let m = Arc::new(m.clone());
            radii
                .par_iter()
                .map(|&rad| abp_run(s, &m, rad).map(|run| (rad, run.margin(), abp_pass(&run, s.tol))))
                .collect()
        }
        t => return Err(Error::ConfigError(format!("radius sweep cannot target `{}`", t.as_str()))),
    };
    let p = if target == Command::VerifyAbp { JACOBIAN } else { ISO };
    let (mut passed, mut failed, mut worst) = (0u64, 0u64, f64::INFINITY);
    for row in rows {
        let (rad, margin, pass) = row?;
        if pass {
            passed += 1;
        } else {
            failed += 1;
        }
        worst = worst.min(margin);
        r.table.push(vec![num(rad), target.as_str().into(), num(margin), pass.to_string()], p, "none");
    }
    r.value("points", passed + failed);
    r.value("pass_count", passed);
    r.value("fail_count", failed);
    r.value("worst_margin", worst);
    r.check("all grid points pass", failed == 0, failed as f64, 0.0, p);
    Ok(())
}

const BISECT_STEPS: usize = 60;

/// Bisection for the largest `K` (or `b0`) with `C1 < 1/(n-2)`, logged step by step.
fn threshold_sweep(s: &Scenario, m: &ModelManifold, r: &mut Report, power_decay: bool) -> Result<()> {
    let n = m.n();
    let beta = m.asymptotic_volume_ratio()?;
    let v0 = s.params.v0.unwrap_or_else(|| ledger::pole_ahlfors_constant(m));
    let alpha = s.params.alpha.unwrap_or(3.0 * n as f64 + 1.0);
    let cal: Calibration = s.calibration;
    let target = 1.0 / (n as f64 - 2.0);
    let c1 = |x: f64| -> Result<f64> {
        if power_decay {
            ledger::kato_bound_case_a(n, alpha, beta, 1.0, x, v0, &cal)
        } else {
            ledger::kato_bound_case_b(n, beta, x, v0, &cal)
        }
    };
    let p = if power_decay { BISECT_A } else { BISECT_B };
    let tag = calibration_tag(&cal);
    let log = |step: usize, phase: &str, lo: f64, hi: f64, clo: f64, chi: f64, mono: bool, r: &mut Report| {
        let cells = vec![step.to_string(), phase.into(), num(lo), num(hi), num(clo), num(chi), mono.to_string()];
        r.table.push(cells, p, &tag);
    };
    let (mut lo, mut hi) = (0.5, 1.0);
    let (mut clo, mut chi) = (c1(lo)?, c1(hi)?);
    let mut step = 0;
    let mut monotone = true;
    while chi < target {
        step += 1;
        if step > 2000 {
            return Err(Error::NoConvergence { iterations: step, change: chi });
        }
        (lo, clo) = (hi, chi);
        hi *= 2.0;
        chi = c1(hi)?;
        monotone &= chi >= clo;
        log(step, "bracket", lo, hi, clo, chi, monotone, r);
    }
    while clo >= target {
        step += 1;
        if step > 2000 {
            return Err(Error::NoConvergence { iterations: step, change: clo });
        }
        (hi, chi) = (lo, clo);
        lo /= 2.0;
        clo = c1(lo)?;
        monotone &= clo <= chi;
        log(step, "bracket", lo, hi, clo, chi, monotone, r);
    }
    for _ in 0..BISECT_STEPS {
        step += 1;
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let cm = c1(mid)?;
        monotone &= clo <= cm && cm <= chi;
        if cm < target {
            (lo, clo) = (mid, cm);
        } else {
            (hi, chi) = (mid, cm);
        }
        log(step, "bisect", lo, hi, clo, chi, monotone, r);
    }
    r.value("witness", lo);
    r.value("c1_witness", clo);
    r.value("target", target);
    r.value("alpha", alpha);
    r.value("v0", v0);
    r.check("bracket is monotone", monotone, 0.0, 0.0, p);
    r.check("witness below target", clo < target, clo, target, p);
    Ok(())
}
