//! Explicit constants and chained bounds, with the anonymous dimensional
//! constants exposed as calibration parameters.

use crate::error::{Error, Result};
use crate::geometry::ModelManifold;
use crate::quad::{adaptive, Tol};
use crate::radial::kato_constant;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Stand-ins for the unnamed `C(n)` factors. All bounds built from them are
/// exact in shape and calibrated in size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Calibration {
    pub c_harnack: f64,
    pub c_meanvalue: f64,
    pub c_litam: f64,
    pub c_green: f64,
    pub c_oscillation: f64,
    /// Multiplier on the first two integrals of the decay-budget Kato chain.
    pub c_ab: f64,
}

impl Default for Calibration {
    fn default() -> Self {
        Calibration { c_harnack: 1.0, c_meanvalue: 1.0, c_litam: 1.0, c_green: 1.0, c_oscillation: 1.0, c_ab: 1.0 }
    }
}

impl Calibration {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in self.fields() {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::BadParameters(format!("calibration {name} must be positive, got {v}")));
            }
        }
        Ok(())
    }

    pub fn fields(&self) -> [(&'static str, f64); 6] {
        [
            ("c_harnack", self.c_harnack),
            ("c_meanvalue", self.c_meanvalue),
            ("c_litam", self.c_litam),
            ("c_green", self.c_green),
            ("c_oscillation", self.c_oscillation),
            ("c_ab", self.c_ab),
        ]
    }

    pub fn with_green(mut self, c: f64) -> Self {
        self.c_green = c;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LedgerEntry {
    pub name: String,
    pub value: f64,
    pub formula: String,
    /// Descriptive anchor of the estimate, or "plumbing".
    pub anchor: String,
    pub inputs: BTreeMap<String, f64>,
    /// Calibration field used, if any.
    pub calibration: Option<String>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct ConstantLedger {
    pub entries: Vec<LedgerEntry>,
}

impl ConstantLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record(
        &mut self,
        name: &str,
        value: f64,
        formula: &str,
        anchor: &str,
        inputs: &[(&str, f64)],
        calibration: Option<&str>,
    ) -> f64 {
        self.entries.push(LedgerEntry {
            name: name.into(),
            value,
            formula: formula.into(),
            anchor: anchor.into(),
            inputs: inputs.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            calibration: calibration.map(str::to_string),
        });
        value
    }

    pub fn get(&self, name: &str) -> Option<&LedgerEntry> {
        self.entries.iter().find(|e| e.name == name)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.entries).expect("ledger entries serialize")
    }
}

/// `v0^{-1} (2/α)^n [V0 (Q + α/2)^n - v0 (1 - α/2)^n]`.
pub fn covering_bound(v0: f64, v_upper: f64, alpha: f64, q: f64, n: usize) -> Result<f64> {
    if !(alpha > 0.0 && alpha <= (q - 1.0) / 4.0 * (1.0 + 1e-12)) {
        return Err(Error::BadParameters(format!("need 0 < alpha <= (Q-1)/4, got alpha={alpha}, Q={q}")));
    }
    if !(v0 > 0.0 && v0 <= v_upper) {
        return Err(Error::BadParameters(format!("need 0 < v0 <= V0, got {v0}, {v_upper}")));
    }
    let ni = n as i32;
    Ok((2.0 / alpha).powi(ni) / v0 * (v_upper * (q + alpha / 2.0).powi(ni) - v0 * (1.0 - alpha / 2.0).powi(ni)))
}

/// The two specializations: `ℓ` at `(Q, α) = (2, 1/4)` and `ℓ̂ R^n` at
/// `(Q, α) = (2^6, 1/(12R))`.
pub fn covering_constants(n: usize, v0: f64, v_upper: f64, radius: f64) -> Result<(f64, f64)> {
    if !(radius > 1.0 / 6.0) {
        return Err(Error::BadParameters(format!("second covering needs R > 1/6, got {radius}")));
    }
    Ok((covering_bound(v0, v_upper, 0.25, 2.0, n)?, covering_bound(v0, v_upper, 1.0 / (12.0 * radius), 64.0, n)?))
}

/// `exp(c (1 + √θ R))`.
pub fn harnack_constant(_n: usize, theta: f64, radius: f64, cal: &Calibration) -> f64 {
    (cal.c_harnack * (1.0 + theta.max(0.0).sqrt() * radius)).exp()
}

/// `c exp(c (R √θ + R^2 λ))`.
pub fn meanvalue_constant(_n: usize, theta: f64, lambda: f64, radius: f64, cal: &Calibration) -> f64 {
    let c = cal.c_meanvalue;
    c * (c * (radius * theta.max(0.0).sqrt() + radius * radius * lambda)).exp()
}

/// `K^{-n/2} exp((1 + ξ) exp(c (1 + √K)))`.
pub fn litam_fan_constant(k: f64, n: usize, xi: f64, cal: &Calibration) -> Result<f64> {
    if !(k > 0.0) {
        return Err(Error::KZero);
    }
    if !(xi > 0.0) {
        return Err(Error::BadParameters(format!("xi must be positive, got {xi}")));
    }
    Ok(k.powf(-(n as f64) / 2.0) * ((1.0 + xi) * (cal.c_litam * (1.0 + k.sqrt())).exp()).exp())
}

/// Exponents `(in δ, in r)` of the oscillation bound.
pub fn oscillation_exponents(n: usize) -> (f64, f64) {
    let nf = n as f64;
    (1.5 * nf - 1.0, 1.0 - nf / 2.0)
}

/// `c max{1, δ}^{3n/2 - 1} r^{1 - n/2}`; below `δ = 1` the bound is taken
/// at `δ = 1` with `K` doubled, which leaves the calibrated constant alone.
pub fn oscillation_chain_bound(n: usize, _k: f64, _v0: f64, _v_upper: f64, delta: f64, r: f64, cal: &Calibration) -> f64 {
    let (ed, er) = oscillation_exponents(n);
    cal.c_oscillation * delta.max(1.0).powf(ed) * r.powf(er)
}

/// Exponents `(in δ, in r)` of the Green bound.
pub fn green_exponents(n: usize) -> (f64, f64) {
    let nf = n as f64;
    (3.0 * nf - 2.0, 2.0 - nf)
}

/// `c max{1, δ^{3n-2}} r^{2-n}` for `r <= 1`.
pub fn green_bound(n: usize, _k: f64, _v0: f64, _v_upper: f64, delta: f64, r: f64, cal: &Calibration) -> Result<f64> {
    if r > 1.0 {
        return Err(Error::RadiusTooLarge(r));
    }
    if !(r > 0.0 && delta >= 0.0) {
        return Err(Error::BadParameters(format!("need r > 0 and delta >= 0, got r={r}, delta={delta}")));
    }
    let (ed, er) = green_exponents(n);
    Ok(cal.c_green * delta.powf(ed).max(1.0) * r.powf(er))
}

/// Log-spaced `δ ∈ [1e-2, 1e3]`.
pub fn delta_grid() -> Vec<f64> {
    (0..64).map(|k| 10f64.powf(-2.0 + 5.0 * k as f64 / 63.0)).collect()
}

/// The three integrals of the power-decay Kato chain at a given `δ`, with
/// Ahlfors area element `A(r) = n v0 r^{n-1}`.
pub fn kato_case_a_terms(n: usize, alpha: f64, v0: f64, delta: f64) -> [f64; 3] {
    let nf = n as f64;
    let tol = Tol::rel(1e-12);
    let grow = delta.powf(3.0 * nf - 2.0).max(1.0);
    let i1 = grow / (1.0 + (delta / 2.0).powf(alpha)) * nf / 8.0 * v0 * delta * delta;
    let mass = |r: f64| nf * v0 * r.powf(nf - 1.0) / (1.0 + r.powf(alpha));
    let t = adaptive(&mass, 0.0, (3.0 * delta).min(1.0), tol)
        + if 3.0 * delta > 1.0 { adaptive(&mass, 1.0, 3.0 * delta, tol) } else { 0.0 };
    let i2 = 2f64.powf(nf - 2.0) * grow / delta.powf(nf - 2.0) * t;
    // substitute r = 1/s on [1, inf)
    let near = |r: f64| nf * v0 * r / (1.0 + r.powf(alpha));
    let far = |s: f64| if s == 0.0 { 0.0 } else { nf * v0 * s.powf(alpha - 3.0 * nf - 1.0) / (s.powf(alpha) + 1.0) };
    let i3 = 2f64.powf(alpha) * (adaptive(&near, 0.0, 1.0, tol) + adaptive(&far, 0.0, 1.0, tol));
    [i1, i2, i3]
}

/// `(n-1) K c_green sup_δ [I1 + I2 + I3]`.
pub fn kato_bound_case_a(n: usize, alpha: f64, _beta: f64, _xi: f64, k: f64, v0: f64, cal: &Calibration) -> Result<f64> {
    let min = 3.0 * n as f64;
    if !(alpha > min) {
        return Err(Error::AlphaTooSmall { alpha, min });
    }
    if !(k >= 0.0 && v0 > 0.0) {
        return Err(Error::BadParameters(format!("need K >= 0 and v0 > 0, got K={k}, v0={v0}")));
    }
    if k == 0.0 {
        return Ok(0.0);
    }
    let sup = delta_grid().iter().map(|&d| kato_case_a_terms(n, alpha, v0, d).iter().sum::<f64>()).fold(0.0, f64::max);
    Ok((n as f64 - 1.0) * k * cal.c_green * sup)
}

/// First two integrals of the decay-budget chain per unit of `2 b0`:
/// `n v0 [1/2 + 6^{n-2}/(n-2)]`.
pub fn kato_case_b_inner(n: usize, v0: f64) -> f64 {
    let nf = n as f64;
    nf * v0 * (0.5 + 6f64.powf(nf - 2.0) / (nf - 2.0))
}

/// `(n-1) c_green [2 b0 c_ab C_ab(n, v0) + 8 b0 v0 + 8 n b0 v0]`.
pub fn kato_bound_case_b(n: usize, _beta: f64, b0: f64, v0: f64, cal: &Calibration) -> Result<f64> {
    if !(b0 >= 0.0 && v0 > 0.0) {
        return Err(Error::BadParameters(format!("need b0 >= 0 and v0 > 0, got b0={b0}, v0={v0}")));
    }
    let nf = n as f64;
    let inner = 2.0 * b0 * cal.c_ab * kato_case_b_inner(n, v0);
    let tail = 8.0 * b0 * v0 + 8.0 * nf * b0 * v0;
    Ok((nf - 1.0) * cal.c_green * (inner + tail))
}

/// Tail part of [`kato_bound_case_b`] per unit `b0`: `8 v0 (n-1)(1+n) c_green`.
pub fn kato_case_b_tail_slope(n: usize, v0: f64, cal: &Calibration) -> f64 {
    let nf = n as f64;
    8.0 * v0 * (nf - 1.0) * (1.0 + nf) * cal.c_green
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SobolevConstants {
    pub c_isoperimetric: f64,
    /// Limit of the second constant as the curvature scale vanishes.
    pub c2_limit: f64,
    pub gamma: f64,
}

pub fn sobolev_constants(n: usize, beta: f64, k_infty: f64) -> Result<SobolevConstants> {
    let nf = n as f64;
    let lam = nf - 2.0;
    if !(lam * k_infty < 1.0) || k_infty < 0.0 {
        return Err(Error::NotGaugeable(lam * k_infty));
    }
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::AVRUndefined(format!("beta = {beta}")));
    }
    let gamma = 1.0 / (1.0 - lam * k_infty);
    let base = nf * beta.powf(1.0 / nf);
    let c = nf * (1.0 - lam * k_infty).powf(4.0 * (nf - 1.0) / (nf * lam)) * beta.powf(1.0 / nf);
    let alt = base * gamma.powf(-(4.0 * nf - 4.0) / (nf * lam));
    if !((c - alt).abs() <= 1e-12 * c.abs().max(1e-300)) {
        return Err(Error::DominanceFailure { name: "sobolev consistency".into(), bound: c, exact: alt });
    }
    Ok(SobolevConstants { c_isoperimetric: c, c2_limit: base, gamma })
}

/// Largest `x` in `[0, hi]` with `pred(x)`, assuming `pred` is monotone
/// (true below the threshold).
fn bisect_threshold(pred: impl Fn(f64) -> bool, mut hi: f64) -> Option<f64> {
    if pred(hi) {
        return Some(hi);
    }
    let mut probe = hi;
    while !pred(probe) {
        probe /= 16.0;
        if probe < 1e-300 {
            return None;
        }
    }
    let mut lo = probe;
    hi = probe * 16.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if pred(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-12 * hi {
            break;
        }
    }
    Some(lo)
}

/// `K̃`: the largest `K` with `C1 < 1/(n-2)` in the power-decay chain.
pub fn k_tilde(n: usize, alpha: f64, beta: f64, xi: f64, v0: f64, cal: &Calibration) -> Result<f64> {
    let target = 1.0 / (n as f64 - 2.0);
    let slope = kato_bound_case_a(n, alpha, beta, xi, 1.0, v0, cal)?;
    bisect_threshold(|k| k * slope < target, 1e6)
        .ok_or_else(|| Error::DominanceFailure { name: "K tilde".into(), bound: slope, exact: target })
}

/// `b̃0`: the largest `b0` with `C1 < 1/(n-2)` in the decay-budget chain.
pub fn b0_tilde(n: usize, beta: f64, v0: f64, cal: &Calibration) -> Result<f64> {
    let target = 1.0 / (n as f64 - 2.0);
    bisect_threshold(|b| kato_bound_case_b(n, beta, b, v0, cal).is_ok_and(|c| c < target), 1e6)
        .ok_or_else(|| Error::DominanceFailure { name: "b0 tilde".into(), bound: f64::NAN, exact: target })
}

#[derive(Debug, Clone)]
pub struct DominanceReport {
    /// Minimal `c_green` with `bound >= exact pole Green` on the sweep.
    pub c_star: f64,
    pub green_min_ratio: f64,
    pub kato_exact: f64,
    pub kato_case_a: Option<f64>,
    pub kato_case_b: Option<f64>,
    pub k_decay: Option<f64>,
    pub alpha: f64,
    pub v0: f64,
    pub exponent_r: f64,
    pub exponent_delta: f64,
    pub k_tilde: f64,
    pub b0_tilde: f64,
}

pub const DOMINANCE_DELTAS: [f64; 4] = [0.0, 1.0, 2.0, 5.0];

pub fn dominance_radii() -> Vec<f64> {
    (1..=10).map(|k| k as f64 / 10.0).collect()
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let k = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / k;
    let my = ly.iter().sum::<f64>() / k;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

/// Two-sided Ahlfors constant at the pole, `max(V/r^n, r^n/V)` over the grid.
pub fn pole_ahlfors_constant(m: &ModelManifold) -> f64 {
    let n = m.n() as i32;
    m.grid()
        .nodes()
        .iter()
        .zip(m.volume_nodes())
        .map(|(&r, &v)| {
            let q = v / r.powi(n);
            q.max(1.0 / q)
        })
        .fold(1.0, f64::max)
}

/// `sup (1 + r^α) Ric₋(r) / (n-1)` over the grid.
pub fn decay_constant(m: &ModelManifold, alpha: f64) -> f64 {
    let nf = m.n() as f64;
    m.grid()
        .nodes()
        .iter()
        .zip(m.ric_minus_nodes())
        .map(|(&r, &q)| (1.0 + r.powf(alpha)) * q / (nf - 1.0))
        .fold(0.0, f64::max)
}

/// Cross-checks the ledger against the exact pole Green kernel and Kato
/// constant of `m`, with `c_green` set to its minimal dominating value. The exact side is always the pole kernel: the bound is
/// monotone in `δ`, and off-pole kernels are not computed.
pub fn dominance_check(m: &ModelManifold, cal: &Calibration) -> Result<DominanceReport> {
    cal.validate()?;
    if !m.nonparabolic() {
        return Err(Error::Parabolic);
    }
    let env = m.curvature_envelope()?;
    if !env.b0_finite() {
        return Err(Error::EnvelopeDivergent);
    }
    let n = m.n();
    let radii = dominance_radii();
    let exact: Vec<f64> = radii.iter().map(|&r| m.green_value(r)).collect::<Result<_>>()?;
    let (ed, er) = green_exponents(n);
    let unit = Calibration { c_green: 1.0, ..*cal };
    let c_star = radii
        .iter()
        .zip(&exact)
        .map(|(&r, &g)| g / green_bound(n, 0.0, 1.0, 1.0, 0.0, r, &unit).unwrap())
        .fold(0.0, f64::max);
    let at = cal.with_green(c_star);
    let mut green_min_ratio = f64::INFINITY;
    for &d in &DOMINANCE_DELTAS {
        for (&r, &g) in radii.iter().zip(&exact) {
            let b = green_bound(n, 0.0, 1.0, 1.0, d, r, &at)?;
            green_min_ratio = green_min_ratio.min(b / g);
            if b < g * (1.0 - 1e-12) {
                return Err(Error::DominanceFailure { name: format!("green_bound(delta={d}, r={r})"), bound: b, exact: g });
            }
        }
    }
    let bounds_r: Vec<f64> = radii.iter().map(|&r| green_bound(n, 0.0, 1.0, 1.0, 2.0, r, &at).unwrap()).collect();
    let exponent_r = loglog_slope(&radii, &bounds_r);
    let deltas: Vec<f64> = (0..8).map(|k| 1.5 * 2f64.powi(k)).collect();
    let bounds_d: Vec<f64> = deltas.iter().map(|&d| green_bound(n, 0.0, 1.0, 1.0, d, 0.5, &at).unwrap()).collect();
    let exponent_delta = loglog_slope(&deltas, &bounds_d);
    for (name, got, want) in [("r exponent", exponent_r, er), ("delta exponent", exponent_delta, ed)] {
        if (got - want).abs() > 1e-6 {
            return Err(Error::DominanceFailure { name: name.into(), bound: got, exact: want });
        }
    }

    let kato_exact = kato_constant(m)?.k_infty;
    let beta = m.asymptotic_volume_ratio()?;
    let v0 = pole_ahlfors_constant(m);
    let alpha = 3.0 * n as f64 + 1.0;
    let kd = decay_constant(m, alpha);
    let (k_decay, kato_case_a) = if kd.is_finite() {
        (Some(kd), Some(kato_bound_case_a(n, alpha, beta, 1.0, kd, v0, &at)?))
    } else {
        (None, None)
    };
    let kato_case_b = Some(kato_bound_case_b(n, beta, env.b0, v0, &at)?);
    for (name, b) in [("kato_bound_case_a", kato_case_a), ("kato_bound_case_b", kato_case_b)] {
        if let Some(b) = b {
            if b < kato_exact * (1.0 - 1e-9) {
                return Err(Error::DominanceFailure { name: name.into(), bound: b, exact: kato_exact });
            }
        }
    }
    let k_tilde = k_tilde(n, alpha, beta, 1.0, v0, &at)?;
    let b0_tilde = b0_tilde(n, beta, v0, &at)?;
    Ok(DominanceReport {
        c_star,
        green_min_ratio,
        kato_exact,
        kato_case_a,
        kato_case_b,
        k_decay,
        alpha,
        v0,
        exponent_r,
        exponent_delta,
        k_tilde,
        b0_tilde,
    })
}

/// Evaluates every ledger formula with inputs taken from `m`.
pub fn ledger_for_manifold(m: &ModelManifold, cal: &Calibration) -> Result<ConstantLedger> {
    cal.validate()?;
    let n = m.n();
    let nf = n as f64;
    let mut l = ConstantLedger::new();
    let env = m.curvature_envelope()?;
    let beta = m.asymptotic_volume_ratio()?;
    let v0 = pole_ahlfors_constant(m);
    l.record("ahlfors_v0", v0, "max over r of max(V(r)/r^n, r^n/V(r)) at the pole", "plumbing", &[("n", nf)], None);
    l.record("avr_beta", beta, "lim V(r)/r^n", "asymptotic volume ratio", &[("n", nf)], None);
    l.record("envelope_K", env.k, "sup (1+r)^alpha lambda(r)", "plumbing", &[("alpha", env.alpha)], None);
    l.record("envelope_b0", env.b0, "int_0^inf s lambda(s) ds", "asymptotic curvature budget", &[], None);
    let (ell, ell_hat) = covering_constants(n, 1.0 / v0, v0, 1.0)?;
    l.record("covering_ell", ell, "v0^-1 (2/alpha)^n [V0(Q+alpha/2)^n - v0(1-alpha/2)^n], Q=2, alpha=1/4", "covering lemma", &[("v0", 1.0 / v0), ("V0", v0)], None);
    l.record("covering_ell_hat", ell_hat, "same with Q=2^6, alpha=1/(12R), R=1", "covering lemma", &[("v0", 1.0 / v0), ("V0", v0), ("R", 1.0)], None);
    let theta = env.k;
    l.record("harnack", harnack_constant(n, theta, 1.0, cal), "exp(c(1+sqrt(theta) R))", "Cheng–Yau Harnack", &[("theta", theta), ("R", 1.0)], Some("c_harnack"));
    l.record(
        "meanvalue",
        meanvalue_constant(n, theta, 2.0 * (nf - 1.0) * theta, 1.0, cal),
        "c exp(c(R sqrt(theta) + R^2 lambda))",
        "mean-value inequality",
        &[("theta", theta), ("lambda", 2.0 * (nf - 1.0) * theta), ("R", 1.0)],
        Some("c_meanvalue"),
    );
    match litam_fan_constant(env.k, n, 1.0, cal) {
        Ok(v) => {
            l.record("litam_fan", v, "K^{-n/2} exp((1+xi) exp(c(1+sqrt K)))", "Li–Tam Green bound", &[("K", env.k), ("xi", 1.0)], Some("c_litam"));
        }
        Err(Error::KZero) => {
            l.record("litam_fan", f64::INFINITY, "K^{-n/2} exp((1+xi) exp(c(1+sqrt K))), singular at K=0", "Li–Tam Green bound", &[("K", 0.0), ("xi", 1.0)], Some("c_litam"));
        }
        Err(e) => return Err(e),
    }
    l.record(
        "oscillation_chain",
        oscillation_chain_bound(n, theta, 1.0 / v0, v0, 1.0, 1.0, cal),
        "c max{1,delta}^{3n/2-1} r^{1-n/2}",
        "oscillation chain",
        &[("delta", 1.0), ("r", 1.0)],
        Some("c_oscillation"),
    );
    l.record(
        "green_bound",
        green_bound(n, theta, 1.0 / v0, v0, 1.0, 1.0, cal)?,
        "c max{1,delta^{3n-2}} r^{2-n}",
        "Green kernel upper bound",
        &[("delta", 1.0), ("r", 1.0)],
        Some("c_green"),
    );
    l.record(
        "kato_case_b",
        kato_bound_case_b(n, beta, env.b0, v0, cal)?,
        "(n-1) c_green [2 b0 c_ab C_ab + 8 b0 v0 + 8 n b0 v0]",
        "Kato bound under a curvature-decay budget",
        &[("b0", env.b0), ("v0", v0)],
        Some("c_green"),
    );
    let alpha = 3.0 * nf + 1.0;
    let kd = decay_constant(m, alpha);
    if kd.is_finite() {
        l.record(
            "kato_case_a",
            kato_bound_case_a(n, alpha, beta, 1.0, kd, v0, cal)?,
            "(n-1) K c_green sup_delta [I1+I2+I3]",
            "Kato bound under power curvature decay",
            &[("K", kd), ("alpha", alpha), ("v0", v0)],
            Some("c_green"),
        );
    }
    if let Ok(k) = kato_constant(m) {
        l.record("kato_exact", k.k_infty, "sup_x int G(x,y) Ric_-(y) dy", "elliptic Kato constant", &[], None);
        if let Ok(s) = sobolev_constants(n, beta, k.k_infty) {
            l.record("isoperimetric_constant", s.c_isoperimetric, "n (1-(n-2)k)^{4(n-1)/(n(n-2))} beta^{1/n}", "isoperimetric constant", &[("k_infty", k.k_infty), ("beta", beta)], None);
            l.record("gauge_gamma", s.gamma, "1/(1-(n-2)k)", "gauge bound", &[("k_infty", k.k_infty)], None);
        }
    }
    Ok(l)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{E, PI};

    #[test]
    fn covering_arithmetic() {
        assert_eq!(covering_bound(1.0, 1.0, 0.25, 2.0, 3).unwrap(), 4570.0);
        assert_eq!(covering_bound(1.0, 2.0, 0.25, 2.0, 3).unwrap(), 9483.0);
        assert!(covering_bound(1.0, 1.0, 0.3, 2.0, 3).is_err());
        assert!(covering_bound(1.0, 1.0, 0.25, 2.0, 3).is_ok());
    }

    #[test]
    fn harnack_and_meanvalue() {
        let c = Calibration::default();
        assert!((harnack_constant(3, 0.0, 1.0, &c) - E).abs() < 1e-15);
        assert!((harnack_constant(3, 4.0, 1.0, &c) - E.powi(3)).abs() < 1e-12);
        assert_eq!(meanvalue_constant(3, 0.0, 0.0, 2.0, &c), 1.0);
        let at = |s: f64| {
            let th = 9.0 * 0.3 / (s * s);
            meanvalue_constant(3, th, 4.0 * th, s / 16.0, &c)
        };
        assert!((at(0.1) / at(7.0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn litam() {
        let c = Calibration::default();
        let v = litam_fan_constant(1.0, 3, 1.0, &c).unwrap();
        assert!((v / (2.0 * E * E).exp() - 1.0).abs() < 1e-12);
        assert!(matches!(litam_fan_constant(0.0, 3, 1.0, &c), Err(Error::KZero)));
        assert!((litam_fan_constant(1.0, 3, 2.0, &c).unwrap().ln() / v.ln() - 1.5).abs() < 1e-12);
    }

    #[test]
    fn green_shape() {
        let c = Calibration::default();
        assert_eq!(green_bound(3, 0.0, 1.0, 1.0, 2.0, 0.5, &c).unwrap(), 256.0);
        assert_eq!(green_bound(3, 0.0, 1.0, 1.0, 0.0, 0.5, &c).unwrap(), 2.0);
        assert!(matches!(green_bound(3, 0.0, 1.0, 1.0, 0.0, 1.5, &c), Err(Error::RadiusTooLarge(_))));
        assert_eq!(oscillation_exponents(3), (3.5, -0.5));
        let a = oscillation_chain_bound(3, 0.0, 1.0, 1.0, 1.0, 0.25, &c);
        assert!((a / oscillation_chain_bound(3, 0.0, 1.0, 1.0, 1.0, 1.0, &c) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn case_b_is_linear() {
        let c = Calibration::default();
        let v0 = 4.0 * PI / 3.0;
        assert_eq!(kato_bound_case_b(3, v0, 0.0, v0, &c).unwrap(), 0.0);
        let a = kato_bound_case_b(3, v0, 0.01, v0, &c).unwrap();
        let b = kato_bound_case_b(3, v0, 0.02, v0, &c).unwrap();
        assert_eq!(b, 2.0 * a);
    }

    #[test]
    fn case_a_vanishes_and_rejects_small_alpha() {
        let c = Calibration::default();
        assert_eq!(kato_bound_case_a(3, 10.0, 1.0, 1.0, 0.0, 1.0, &c).unwrap(), 0.0);
        assert!(matches!(kato_bound_case_a(3, 9.0, 1.0, 1.0, 1.0, 1.0, &c), Err(Error::AlphaTooSmall { .. })));
        let a = kato_bound_case_a(3, 10.0, 1.0, 1.0, 2e-3, 4.0, &c).unwrap();
        let b = kato_bound_case_a(3, 10.0, 1.0, 1.0, 1e-3, 4.0, &c).unwrap();
        assert!((a / b - 2.0).abs() < 1e-12);
    }

    #[test]
    fn sobolev_values() {
        let b = 4.0 * PI / 3.0;
        let s = sobolev_constants(3, b, 0.0).unwrap();
        assert!((s.c_isoperimetric - 4.835975862049409).abs() < 1e-12 && s.gamma == 1.0);
        let s = sobolev_constants(3, b, 0.5).unwrap();
        assert!((s.c_isoperimetric - 0.7616184731724444).abs() < 1e-12 && s.gamma == 2.0);
        assert!(matches!(sobolev_constants(3, b, 1.0), Err(Error::NotGaugeable(_))));
    }

    #[test]
    fn calibration_json() {
        let c: Calibration = serde_json::from_str(r#"{"c_green": 0.5}"#).unwrap();
        assert_eq!(c.c_green, 0.5);
        assert_eq!(c.c_harnack, 1.0);
        assert!(Calibration { c_litam: 0.0, ..c }.validate().is_err());
    }
}
