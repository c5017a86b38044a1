//! Radial ABP transport on geodesic balls `B_R(o)`: scaling normalization,
//! weighted Neumann problem, Jacobi fields along the transport geodesics and
//! the resulting Sobolev and isoperimetric checks.

use crate::error::{Error, Result};
use crate::geometry::ModelManifold;
use crate::quad::{adaptive, Tol};
use crate::radial::kato_constant;
use crate::radial_fn::RadialFn;
use rayon::prelude::*;
use std::sync::Arc;

/// Number of uniform subintervals of `[0, R]` for the Neumann solution.
pub const BALL_CELLS: usize = 1024;

/// `Ω = B_R(o)` with weight `e^{-f}` and test function `h_scale * h`.
#[derive(Debug, Clone)]
pub struct WeightedBallProblem {
    pub manifold: Arc<ModelManifold>,
    pub radius: f64,
    pub f: RadialFn,
    pub h: RadialFn,
    pub h_scale: f64,
}

impl WeightedBallProblem {
    pub fn new(manifold: Arc<ModelManifold>, radius: f64, f: RadialFn, h: RadialFn) -> Result<Self> {
        if !(radius > 0.0) || radius > manifold.r_max() {
            return Err(Error::BadParameters(format!("ball radius {radius} outside (0, R_max]")));
        }
        let (_, lo) = h.range_on(radius);
        if !(lo > 0.0) {
            return Err(Error::BadParameters("h must be positive on the ball".into()));
        }
        Ok(WeightedBallProblem { manifold, radius, f, h, h_scale: 1.0 })
    }

    /// Unweighted problem with `h = 1`.
    pub fn unweighted(manifold: Arc<ModelManifold>, radius: f64) -> Result<Self> {
        Self::new(manifold, radius, RadialFn::Zero, RadialFn::constant(1.0))
    }

    pub fn n(&self) -> usize {
        self.manifold.n()
    }

    /// `k = (sup f - inf f) / 2`.
    pub fn k(&self) -> f64 {
        self.f.half_oscillation()
    }

    /// Scaled `[h, h', h'']`.
    pub fn h_jet(&self, r: f64) -> [f64; 3] {
        let [a, b, c] = self.h.jet(r);
        [self.h_scale * a, self.h_scale * b, self.h_scale * c]
    }

    /// `n h^{n/(n-1)} - |h'|`.
    fn source(&self, r: f64) -> f64 {
        let n = self.n() as f64;
        let [h, d1, _] = self.h_jet(r);
        n * h.powf(n / (n - 1.0)) - d1.abs()
    }

    fn density(&self, r: f64) -> f64 {
        (-self.f.eval(r)).exp() * self.manifold.wpow(r)
    }

    /// `(int |∇h| e^{-f} + int_{∂Ω} h e^{-f},  n int h^{n/(n-1)} e^{-f})`.
    pub fn scaling_sides(&self) -> (f64, f64) {
        let m = &*self.manifold;
        let om = m.omega();
        let n = self.n() as f64;
        let r = self.radius;
        let tol = Tol::rel(1e-13);
        let grad = |t: f64| self.h_jet(t)[1].abs() * self.density(t);
        let mass = |t: f64| self.h_jet(t)[0].powf(n / (n - 1.0)) * self.density(t);
        let lhs = om * adaptive(&grad, 0.0, r, tol) + om * self.h_jet(r)[0] * self.density(r);
        let rhs = n * om * adaptive(&mass, 0.0, r, tol);
        (lhs, rhs)
    }

    /// `∫_Ω h^{n/(n-1)} e^{-f}`.
    pub fn weighted_mass(&self) -> f64 {
        self.scaling_sides().1 / self.n() as f64
    }
}

/// Rescales `h` so that both sides of the scaling identity agree.
pub fn normalize_scaling(p: &WeightedBallProblem) -> Result<WeightedBallProblem> {
    let (lhs, rhs) = p.scaling_sides();
    if lhs == 0.0 && rhs == 0.0 {
        return Err(Error::DegenerateH);
    }
    if !(lhs > 0.0 && rhs > 0.0) {
        return Err(Error::DegenerateH);
    }
    let n = p.n() as f64;
    // c L = c^{n/(n-1)} R  =>  c = (L/R)^{n-1}
    let c = (lhs / rhs).powf(n - 1.0);
    let mut out = p.clone();
    out.h_scale *= c;
    Ok(out)
}

/// Radial Neumann solution `u` on `[0, R]` with `u(0) = 0`.
#[derive(Debug, Clone)]
pub struct NeumannSolution {
    pub r: Vec<f64>,
    pub u: Vec<f64>,
    pub du: Vec<f64>,
    pub d2u: Vec<f64>,
    /// `Δ_f u` at the nodes.
    pub lap_f: Vec<f64>,
    /// Maximal intervals where `|u'| < 1`.
    pub u_set: Vec<(f64, f64)>,
    /// `u'' >= 0` on `U`, in which case `A_r = U`.
    pub convex: bool,
    flux: Vec<f64>,
    problem: WeightedBallProblem,
}

impl NeumannSolution {
    fn flux_at(&self, x: f64) -> f64 {
        let p = &self.problem;
        let h = p.radius / BALL_CELLS as f64;
        let i = ((x / h).floor() as usize).min(BALL_CELLS - 1);
        let g = |t: f64| p.source(t) * p.density(t);
        self.flux[i] + adaptive(&g, i as f64 * h, x, Tol::rel(1e-13))
    }

    /// `u'(x)` from the flux identity.
    pub fn du_at(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        let p = &self.problem;
        self.flux_at(x) / (p.h_jet(x)[0] * p.density(x))
    }

    /// `u''(x) = S/h - u' [(n-1) w'/w - f' + h'/h]`.
    pub fn d2u_at(&self, x: f64) -> f64 {
        let p = &self.problem;
        let n = p.n() as f64;
        let [h, h1, _] = p.h_jet(x);
        if x <= 0.0 {
            return p.source(0.0) / (n * h);
        }
        let [w, w1, _, _] = p.manifold.profile().jet(x);
        let f1 = p.f.jet(x)[1];
        p.source(x) / h - self.du_at(x) * ((n - 1.0) * w1 / w - f1 + h1 / h)
    }

    /// `Δ_f u = S/h - u' h'/h`.
    pub fn lap_f_at(&self, x: f64) -> f64 {
        let p = &self.problem;
        let [h, h1, _] = p.h_jet(x);
        p.source(x) / h - self.du_at(x) * h1 / h
    }

    /// `u(x)` by Simpson on the exact slope.
    pub fn u_at(&self, x: f64) -> f64 {
        let hb = self.problem.radius / BALL_CELLS as f64;
        let i = ((x / hb).floor() as usize).min(BALL_CELLS - 1);
        let a = self.r[i];
        self.u[i] + (x - a) / 6.0 * (self.du[i] + 4.0 * self.du_at(0.5 * (a + x)) + self.du_at(x))
    }

    pub fn problem(&self) -> &WeightedBallProblem {
        &self.problem
    }

    pub fn u_set_length(&self) -> f64 {
        self.u_set.iter().map(|(a, b)| b - a).sum()
    }

    /// `k` start radii spread uniformly over `U`.
    pub fn start_radii(&self, k: usize) -> Vec<f64> {
        let total = self.u_set_length();
        (0..k)
            .map(|j| {
                let mut s = total * (j as f64 + 0.5) / k as f64;
                for &(a, b) in &self.u_set {
                    if s <= b - a {
                        return a + s;
                    }
                    s -= b - a;
                }
                self.u_set.last().map_or(0.0, |v| v.1)
            })
            .collect()
    }

    pub fn in_u(&self, x: f64) -> bool {
        self.u_set.iter().any(|&(a, b)| x >= a && x < b)
    }
}

fn bisect(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let fa = f(a) > 0.0;
    for _ in 0..100 {
        let m = 0.5 * (a + b);
        if (f(m) > 0.0) == fa {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

pub fn solve_neumann_radial(p: &WeightedBallProblem) -> Result<NeumannSolution> {
    let big_r = p.radius;
    let hb = big_r / BALL_CELLS as f64;
    let r: Vec<f64> = (0..=BALL_CELLS).map(|k| k as f64 * hb).collect();
    let g = |t: f64| p.source(t) * p.density(t);
    let tol = Tol::rel(1e-13);
    let incr: Vec<f64> = (0..BALL_CELLS).into_par_iter().map(|k| adaptive(&g, r[k], r[k + 1], tol)).collect();
    let mut flux = vec![0.0; BALL_CELLS + 1];
    for k in 0..BALL_CELLS {
        flux[k + 1] = flux[k] + incr[k];
    }
    let mut sol = NeumannSolution {
        r: r.clone(),
        u: vec![0.0; BALL_CELLS + 1],
        du: vec![0.0; BALL_CELLS + 1],
        d2u: vec![0.0; BALL_CELLS + 1],
        lap_f: vec![0.0; BALL_CELLS + 1],
        u_set: vec![],
        convex: true,
        flux,
        problem: p.clone(),
    };
    let boundary = {
        let [h, _, _] = p.h_jet(big_r);
        sol.flux[BALL_CELLS] / (h * p.density(big_r))
    };
    if !((boundary - 1.0).abs() <= 1e-8) {
        return Err(Error::NotNormalized(boundary - 1.0));
    }
    for k in 0..=BALL_CELLS {
        let x = r[k];
        sol.du[k] = if k == BALL_CELLS { boundary } else { sol.du_at(x) };
        sol.d2u[k] = sol.d2u_at(x);
        sol.lap_f[k] = sol.lap_f_at(x);
    }
    for k in 0..BALL_CELLS {
        let mid = 0.5 * (r[k] + r[k + 1]);
        sol.u[k + 1] = sol.u[k] + hb / 6.0 * (sol.du[k] + 4.0 * sol.du_at(mid) + sol.du[k + 1]);
    }

    // U = {|u'| < 1} in the open ball.
    let ind = |x: f64| sol.du_at(x).abs() - 1.0;
    let mut set = Vec::new();
    let mut start: Option<f64> = if ind(0.0) < 0.0 { Some(0.0) } else { None };
    for k in 1..BALL_CELLS {
        let inside = sol.du[k].abs() < 1.0;
        match (start, inside) {
            (None, true) => start = Some(bisect(ind, r[k - 1], r[k])),
            (Some(a), false) => {
                set.push((a, bisect(ind, r[k - 1], r[k])));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(a) = start {
        set.push((a, big_r));
    }
    sol.convex = (0..=BALL_CELLS).all(|k| !sol.in_u(r[k]) || (sol.d2u[k] >= -1e-12 && sol.du[k] >= 0.0));
    sol.u_set = set;
    Ok(sol)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JacobianSample {
    pub x_bar: f64,
    pub t: f64,
    pub det_p: f64,
    pub bound: f64,
    /// Riccati residual normalized by `1 + (tr Q)^2`.
    pub riccati: f64,
}

#[derive(Debug, Clone)]
pub struct JacobianTrace {
    pub samples: Vec<JacobianSample>,
    /// First time where `det P` reached zero, if any.
    pub conjugate_at: Option<f64>,
}

impl JacobianTrace {
    /// Samples with `det P > bound (1 + rel)`.
    pub fn violations(&self, rel: f64) -> usize {
        self.samples.iter().filter(|s| s.det_p > 0.0 && s.det_p > s.bound * (1.0 + rel)).count()
    }
    pub fn max_riccati(&self) -> f64 {
        self.samples.iter().map(|s| s.riccati).fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Step counts of the Jacobi integration.
#[derive(Debug, Clone, Copy)]
pub struct SamplingPolicy {
    pub start_radii: usize,
    pub steps: usize,
    /// Horizon as a multiple of `R`.
    pub horizon_factor: f64,
}

impl Default for SamplingPolicy {
    fn default() -> Self {
        SamplingPolicy { start_radii: 32, steps: 512, horizon_factor: 4.0 }
    }
}

struct Geodesic<'a> {
    p: &'a WeightedBallProblem,
    x: f64,
    speed: f64,
    f0: f64,
}

impl Geodesic<'_> {
    fn rho(&self, t: f64) -> f64 {
        (self.x + self.speed * t).abs()
    }

    /// `[j, j', I]' = [j', s^2 (w''/w)(ρ) j, e^{-(2/n)(F - F0)}]`.
    fn rhs(&self, t: f64, y: [f64; 3]) -> [f64; 3] {
        let rho = self.rho(t);
        let n = self.p.n() as f64;
        let [w, _, w2, _] = self.p.manifold.profile().jet(rho);
        let k = if rho == 0.0 { 0.0 } else { w2 / w };
        let ff = self.p.f.eval(rho) - self.f0;
        [y[1], self.speed * self.speed * k * y[0], (-2.0 / n * ff).exp()]
    }

    fn rk4(&self, t: f64, y: [f64; 3], dt: f64) -> [f64; 3] {
        let add = |a: [f64; 3], b: [f64; 3], s: f64| [a[0] + s * b[0], a[1] + s * b[1], a[2] + s * b[2]];
        let k1 = self.rhs(t, y);
        let k2 = self.rhs(t + 0.5 * dt, add(y, k1, 0.5 * dt));
        let k3 = self.rhs(t + 0.5 * dt, add(y, k2, 0.5 * dt));
        let k4 = self.rhs(t + dt, add(y, k3, dt));
        let mut out = y;
        for i in 0..3 {
            out[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        out
    }

    /// One output step, halved until the full and two-half-step results agree.
    fn step(&self, t: f64, y: [f64; 3], dt: f64, depth: u32) -> [f64; 3] {
        let full = self.rk4(t, y, dt);
        let mid = self.rk4(t, y, 0.5 * dt);
        let half = self.rk4(t + 0.5 * dt, mid, 0.5 * dt);
        let err = (0..3).map(|i| (full[i] - half[i]).abs() / (1.0 + half[i].abs())).fold(0.0, f64::max);
        if err < 1e-12 || depth == 0 {
            half
        } else {
            let m = self.step(t, y, 0.5 * dt, depth - 1);
            self.step(t + 0.5 * dt, m, 0.5 * dt, depth - 1)
        }
    }
}

/// `det P(t)` from the Jacobi equation and the transport bound along the
/// geodesic `t -> exp_x̄(t ∇u(x̄))`.
pub fn transport_jacobian(
    p: &WeightedBallProblem,
    sol: &NeumannSolution,
    x_bar: f64,
    horizon: f64,
    steps: usize,
) -> Result<JacobianTrace> {
    if !sol.in_u(x_bar) {
        return Err(Error::OutsideU(x_bar));
    }
    let n = p.n() as f64;
    let speed = sol.du_at(x_bar);
    let a = sol.d2u_at(x_bar);
    let lap = sol.lap_f_at(x_bar);
    let [w, w1, _, _] = p.manifold.profile().jet(x_bar);
    let dj0 = if x_bar > 0.0 { speed * w1 / w } else { a };
    let f0 = p.f.eval(x_bar);
    let geo = Geodesic { p, x: x_bar, speed, f0 };
    let dt = horizon / steps as f64;
    let mut y = [1.0, dj0, 0.0];
    let mut samples = Vec::with_capacity(steps + 1);
    let mut conjugate_at = None;
    for k in 0..=steps {
        let t = k as f64 * dt;
        if k > 0 {
            y = geo.step(t - dt, y, dt, 12);
        }
        let radial = 1.0 + a * t;
        let det_p = radial * y[0].powf(n - 1.0);
        if det_p <= 0.0 || y[0] <= 0.0 {
            conjugate_at = Some(t);
            break;
        }
        let ff = p.f.eval(geo.rho(t)) - f0;
        let bound = ff.exp() * (1.0 + lap / n * y[2]).powf(n);
        let riccati = riccati_at(&geo, a, t, y);
        samples.push(JacobianSample { x_bar, t, det_p, bound, riccati });
    }
    Ok(JacobianTrace { samples, conjugate_at })
}

/// `d/dt(tr Q - F') + (tr Q)^2 / n`, normalized by `1 + (tr Q)^2`.
fn riccati_at(geo: &Geodesic, a: f64, t: f64, y: [f64; 3]) -> f64 {
    let p = geo.p;
    let n = p.n() as f64;
    let rho = geo.rho(t);
    let [w, _, w2, _] = p.manifold.profile().jet(rho);
    let k = if rho == 0.0 { 0.0 } else { w2 / w };
    let s2 = geo.speed * geo.speed;
    let rad = a / (1.0 + a * t);
    let tan = y[1] / y[0];
    let tr_q = rad + (n - 1.0) * tan;
    let f2 = p.f.jet(rho)[2];
    let d_tr = -rad * rad + (n - 1.0) * (s2 * k - tan * tan);
    let res = d_tr - s2 * f2 + tr_q * tr_q / n;
    res / (1.0 + tr_q * tr_q)
}

/// Maximum normalized Riccati residual along the geodesic from `x̄`.
pub fn riccati_residual(p: &WeightedBallProblem, sol: &NeumannSolution, x_bar: f64, horizon: f64) -> Result<f64> {
    let tr = transport_jacobian(p, sol, x_bar, horizon, SamplingPolicy::default().steps)?;
    Ok(tr.max_riccati())
}

/// Radial `A_r` membership: the defining inequality tested against points
/// of `U` on the same ray.
fn in_a_r(sol: &NeumannSolution, x: f64, r: f64) -> bool {
    if sol.convex {
        return sol.in_u(x);
    }
    let du = sol.du_at(x);
    let rho = x + r * du;
    let lhs_min = r * sol.u_at(x) + 0.5 * r * r * du * du;
    let scale = 1.0 + lhs_min.abs();
    sol.r.iter().filter(|&&y| sol.in_u(y)).all(|&y| {
        let d = rho - y;
        r * sol.u_at(y) + 0.5 * d * d >= lhs_min - 1e-10 * scale
    })
}

/// `sup_{A_r} (x̄ + r u'(x̄)) - (r - 2R)`.
pub fn surjectivity_check(p: &WeightedBallProblem, sol: &NeumannSolution, r: f64) -> Result<f64> {
    let diam = 2.0 * p.radius;
    if !(r > diam) {
        return Err(Error::HorizonTooSmall { r, diam });
    }
    let mut best = f64::NEG_INFINITY;
    let mut cands: Vec<f64> = sol.r.iter().copied().filter(|&x| sol.in_u(x)).collect();
    for &(a, b) in &sol.u_set {
        cands.push(a);
        cands.push(b);
    }
    for x in cands {
        let ok = in_a_r(sol, x.min(p.radius * (1.0 - 1e-12)), r);
        if ok {
            let du = if x >= p.radius { sol.du[BALL_CELLS] } else { sol.du_at(x) };
            best = best.max(x + r * du);
        }
    }
    Ok(best - (r - diam))
}

#[derive(Debug, Clone, Copy)]
pub struct SobolevCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub pass: bool,
    pub k: f64,
    pub beta_f: f64,
    /// Minimum Bakry–Émery eigenvalue on the grid.
    pub min_ric_f: f64,
}

/// Smallest eigenvalue of `Ric + Hess f` over the grid.
pub fn min_bakry_emery(m: &ModelManifold, f: &RadialFn) -> f64 {
    let (rad, tan) = m.ricci_nodes();
    let mut lo = f64::INFINITY;
    for (i, &r) in m.grid().nodes().iter().enumerate() {
        let [_, f1, f2] = f.jet(r);
        let [w, w1, _, _] = m.profile().jet(r);
        lo = lo.min((rad[i] + f2).min(tan[i] + f1 * w1 / w));
    }
    lo
}

/// Weighted asymptotic volume ratio `e^{-f(inf)} β`.
pub fn weighted_avr(m: &ModelManifold, f: &RadialFn) -> Result<f64> {
    let lim = f.limit_at_infinity().ok_or_else(|| Error::AVRUndefined("weight has no limit at infinity".into()))?;
    let beta = m.asymptotic_volume_ratio()?;
    let bf = (-lim).exp() * beta;
    if !(bf > 0.0 && bf.is_finite()) {
        return Err(Error::AVRUndefined(format!("beta_f = {bf}")));
    }
    Ok(bf)
}

/// Weighted Sobolev inequality on the ball with constant `e^{4k/n}/(n β_f^{1/n})`.
pub fn weighted_sobolev_check(p: &WeightedBallProblem) -> Result<SobolevCheck> {
    let m = &*p.manifold;
    let min_ric_f = min_bakry_emery(m, &p.f);
    if min_ric_f < -1e-8 {
        return Err(Error::CurvatureHypothesisFails(min_ric_f));
    }
    let beta_f = weighted_avr(m, &p.f)?;
    let n = p.n() as f64;
    let k = p.k();
    let (l1, r1) = p.scaling_sides();
    let lhs = (r1 / n).powf((n - 1.0) / n);
    let rhs = (4.0 * k / n).exp() / (n * beta_f.powf(1.0 / n)) * l1;
    Ok(SobolevCheck { lhs, rhs, pass: lhs <= rhs * (1.0 + 1e-9), k, beta_f, min_ric_f })
}

#[derive(Debug, Clone, Copy)]
pub struct IsoperimetricCheck {
    pub ratio: f64,
    pub threshold: f64,
    pub pass: bool,
    pub k_infty: f64,
    pub beta: f64,
}

/// `n (1 - (n-2) k)^{4(n-1)/(n(n-2))} β^{1/n}`.
pub fn isoperimetric_threshold(n: usize, k_infty: f64, beta: f64) -> f64 {
    let nf = n as f64;
    let lam = nf - 2.0;
    nf * (1.0 - lam * k_infty).powf(4.0 * (nf - 1.0) / (nf * lam)) * beta.powf(1.0 / nf)
}

pub fn isoperimetric_check(m: &ModelManifold, radius: f64) -> Result<IsoperimetricCheck> {
    let k = match kato_constant(m) {
        Ok(k) => k.k_infty,
        Err(Error::Divergent(_)) => return Err(Error::NotGaugeable(f64::INFINITY)),
        Err(e) => return Err(e),
    };
    let beta = m.asymptotic_volume_ratio()?;
    isoperimetric_check_with(m, radius, k, beta)
}

/// As [`isoperimetric_check`] with precomputed `k_infty` and `β`.
pub fn isoperimetric_check_with(m: &ModelManifold, radius: f64, k_infty: f64, beta: f64) -> Result<IsoperimetricCheck> {
    let n = m.n();
    let lam = (n - 2) as f64;
    if !(lam * k_infty < 1.0) {
        return Err(Error::NotGaugeable(lam * k_infty));
    }
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::AVRUndefined(format!("beta = {beta}")));
    }
    let (v, a) = m.volume_and_area(radius)?;
    let ratio = a / v.powf((n as f64 - 1.0) / n as f64);
    let threshold = isoperimetric_threshold(n, k_infty, beta);
    Ok(IsoperimetricCheck { ratio, threshold, pass: ratio >= threshold * (1.0 - 1e-9), k_infty, beta })
}

/// Full pipeline output.
#[derive(Debug, Clone)]
pub struct TransportResult {
    pub neumann: NeumannSolution,
    pub jacobian_samples: Vec<JacobianSample>,
    pub conjugate_points: Vec<(f64, f64)>,
    pub riccati_residuals: Vec<f64>,
    pub surjectivity_margin: f64,
    pub sobolev: Option<SobolevCheck>,
    pub violations: usize,
}

/// Normalizes, solves, samples Jacobians from `policy.start_radii` points of
/// `U` and evaluates surjectivity and (when its hypotheses hold) the
/// weighted Sobolev inequality.
pub fn run_transport(p: &WeightedBallProblem, policy: SamplingPolicy) -> Result<TransportResult> {
    let p = normalize_scaling(p)?;
    let sol = solve_neumann_radial(&p)?;
    let horizon = policy.horizon_factor * p.radius;
    let starts = sol.start_radii(policy.start_radii);
    let traces: Vec<Result<JacobianTrace>> =
        starts.par_iter().map(|&x| transport_jacobian(&p, &sol, x, horizon, policy.steps)).collect();
    let mut samples = Vec::new();
    let mut conj = Vec::new();
    let mut ric = Vec::new();
    let mut violations = 0;
    for (tr, &x) in traces.into_iter().zip(&starts) {
        let tr = tr?;
        violations += tr.violations(1e-9);
        ric.push(tr.max_riccati());
        if let Some(t) = tr.conjugate_at {
            conj.push((x, t));
        }
        samples.extend(tr.samples);
    }
    let margin = surjectivity_check(&p, &sol, horizon.max(2.0 * p.radius * 1.25))?;
    let sobolev = weighted_sobolev_check(&p).ok();
    Ok(TransportResult {
        neumann: sol,
        jacobian_samples: samples,
        conjugate_points: conj,
        riccati_residuals: ric,
        surjectivity_margin: margin,
        sobolev,
        violations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::build_manifold;
    use crate::grid::GridSpec;
    use crate::profile::WarpingProfile;
    use std::f64::consts::PI;

    fn euclid(n: usize) -> Arc<ModelManifold> {
        Arc::new(build_manifold(n, WarpingProfile::euclidean(), GridSpec::default()).unwrap())
    }

    #[test]
    fn scaling_constants() {
        let m = euclid(3);
        let p = WeightedBallProblem::unweighted(m.clone(), 1.0).unwrap();
        let q = normalize_scaling(&p).unwrap();
        assert!((q.h_scale - 1.0).abs() < 1e-12);
        let p2 = WeightedBallProblem::unweighted(m, 2.0).unwrap();
        let q2 = normalize_scaling(&p2).unwrap();
        assert!((q2.h_scale - 0.25).abs() < 1e-12);
        let q3 = normalize_scaling(&q2).unwrap();
        assert!((q3.h_scale / q2.h_scale - 1.0).abs() < 1e-12);
    }

    #[test]
    fn euclidean_quadratic_solution() {
        let p = WeightedBallProblem::unweighted(euclid(3), 1.0).unwrap();
        let sol = solve_neumann_radial(&normalize_scaling(&p).unwrap()).unwrap();
        for k in (0..=BALL_CELLS).step_by(64) {
            let x = sol.r[k];
            assert!((sol.du[k] - x).abs() < 1e-10);
            assert!((sol.u[k] - x * x / 2.0).abs() < 1e-10);
        }
        assert_eq!(sol.u_set.len(), 1);
        assert!(sol.u_set[0].0 == 0.0 && (sol.u_set[0].1 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn unnormalized_is_rejected() {
        let p = WeightedBallProblem::unweighted(euclid(3), 2.0).unwrap();
        assert!(matches!(solve_neumann_radial(&p), Err(Error::NotNormalized(_))));
    }

    #[test]
    fn euclidean_equality_of_jacobian() {
        let p = normalize_scaling(&WeightedBallProblem::unweighted(euclid(3), 1.0).unwrap()).unwrap();
        let sol = solve_neumann_radial(&p).unwrap();
        let tr = transport_jacobian(&p, &sol, 0.4, 4.0, 512).unwrap();
        for s in &tr.samples {
            assert!((s.det_p / (1.0 + s.t).powi(3) - 1.0).abs() < 1e-12);
            assert!((s.det_p / s.bound - 1.0).abs() < 1e-12);
            assert!(s.riccati.abs() < 1e-12);
        }
        assert!(matches!(transport_jacobian(&p, &sol, 1.5, 4.0, 8), Err(Error::OutsideU(_))));
    }

    #[test]
    fn surjectivity_euclidean() {
        let p = normalize_scaling(&WeightedBallProblem::unweighted(euclid(3), 1.0).unwrap()).unwrap();
        let sol = solve_neumann_radial(&p).unwrap();
        assert!((surjectivity_check(&p, &sol, 10.0).unwrap() - 3.0).abs() < 1e-9);
        assert!(matches!(surjectivity_check(&p, &sol, 2.0), Err(Error::HorizonTooSmall { .. })));
    }

    #[test]
    fn sobolev_equality_on_unit_ball() {
        let p = WeightedBallProblem::unweighted(euclid(3), 1.0).unwrap();
        let s = weighted_sobolev_check(&p).unwrap();
        assert!((s.lhs / (4.0 * PI / 3.0).powf(2.0 / 3.0) - 1.0).abs() < 1e-12);
        assert!((s.lhs / s.rhs - 1.0).abs() < 1e-9 && s.pass);
    }

    #[test]
    fn isoperimetric_equality() {
        for n in 3..=5 {
            let c = isoperimetric_check(&euclid(n), 1.7).unwrap();
            assert!((c.ratio / c.threshold - 1.0).abs() < 1e-9);
        }
        let t = isoperimetric_threshold(3, 0.5, 4.0 * PI / 3.0);
        assert!((t - 0.761_618_473_172_444).abs() < 1e-12, "{t}");
    }
}
