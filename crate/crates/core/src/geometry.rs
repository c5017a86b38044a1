//! Model manifolds: validation, curvature, volumes, asymptotic volume ratio
//! and curvature envelopes.

use crate::error::{Error, Result};
use crate::grid::{GridSpec, LogGrid, RadialField};
use crate::profile::{Tail, WarpingProfile};
use crate::quad::{adaptive, sphere_area, Tol};
use std::sync::Arc;

/// A rotationally symmetric manifold `dr^2 + w(r)^2 g_{S^{n-1}}` together with
/// its truncation grid and a few precomputed node tables.
#[derive(Debug, Clone)]
pub struct ModelManifold {
    n: usize,
    profile: WarpingProfile,
    grid: Arc<LogGrid>,
    tol: Tol,
    omega: f64,
    w: Vec<f64>,
    /// Cumulative volume `V(r_i)`.
    vol: Vec<f64>,
    /// `W(r_i) = int_{r_i}^inf w^{1-n}`, absent on parabolic manifolds.
    green: Option<Vec<f64>>,
    rad: Vec<f64>,
    tan: Vec<f64>,
    ric_minus: Vec<f64>,
    breaks: Vec<f64>,
}

impl GridSpec {
    /// Default grid, shortened for exponentially growing profiles so that
    /// `w^{n-1}` stays representable.
    pub fn for_profile(profile: &WarpingProfile) -> Self {
        match profile.tail() {
            Tail::Exponential { .. } => GridSpec { r_max: 100.0, ..GridSpec::default() },
            Tail::Power { .. } => GridSpec::default(),
        }
    }
}

/// Validates the profile and precomputes node tables.
pub fn build_manifold(n: usize, profile: WarpingProfile, grid: GridSpec) -> Result<ModelManifold> {
    if n < 3 {
        return Err(Error::DimensionTooLow(n));
    }
    let [w0, d0, _, _] = profile.jet(0.0);
    if w0.abs() > 1e-9 {
        return Err(Error::PoleConditionViolated(format!("w(0) = {w0}")));
    }
    if (d0 - 1.0).abs() > 1e-4 {
        return Err(Error::PoleConditionViolated(format!("w'(0) = {d0}")));
    }
    let grid = Arc::new(LogGrid::new(grid)?);
    let m = n - 1;
    if let Tail::Exponential { rate, .. } = profile.tail() {
        if m as f64 * rate * grid.r_max() > 700.0 {
            return Err(Error::BadParameters(format!(
                "exponential profile overflows on [0, {}]; shorten the grid",
                grid.r_max()
            )));
        }
    }

    // Positivity on nodes, cell midpoints and below the first node.
    let nodes = grid.nodes();
    for k in 1..=8 {
        let r = nodes[0] * k as f64 / 8.0;
        if !(profile.w(r) > 0.0) {
            return Err(Error::NonPositiveWarp(r));
        }
    }
    let w: Vec<f64> = nodes.iter().map(|&r| profile.w(r)).collect();
    for (i, &r) in nodes.iter().enumerate() {
        if !(w[i] > 0.0) || !w[i].is_finite() {
            return Err(Error::NonPositiveWarp(r));
        }
        if i + 1 < nodes.len() {
            let mid = (r * nodes[i + 1]).sqrt();
            if !(profile.w(mid) > 0.0) {
                return Err(Error::NonPositiveWarp(mid));
            }
        }
    }

    let r_max = grid.r_max();
    let ratio = profile.w(r_max) / profile.tail().eval(r_max);
    if !((ratio - 1.0).abs() < 0.05) {
        return Err(Error::TailUnresolved(format!("w(R_max) / tail(R_max) = {ratio}")));
    }

    let omega = sphere_area(m);
    let tol = Tol::default();
    let pw = |r: f64| profile.w(r).powi(m as i32);

    let mut vol = vec![0.0; nodes.len()];
    vol[0] = omega * adaptive(&pw, 0.0, nodes[0], tol);
    for i in 0..nodes.len() - 1 {
        vol[i + 1] = vol[i] + omega * log_integral(&pw, nodes[i], nodes[i + 1], tol);
    }

    let mut mf = ModelManifold {
        n,
        profile,
        grid: Arc::clone(&grid),
        tol,
        omega,
        w,
        vol,
        green: None,
        rad: vec![],
        tan: vec![],
        ric_minus: vec![],
        breaks: vec![],
    };

    if mf.nonparabolic() {
        let inv = |r: f64| mf.profile.w(r).powi(-(m as i32));
        let nn = nodes.len();
        let mut g = vec![0.0; nn];
        g[nn - 1] = mf.green_tail(r_max);
        for i in (0..nn - 1).rev() {
            g[i] = g[i + 1] + log_integral(&inv, nodes[i], nodes[i + 1], tol);
        }
        mf.green = Some(g);
    }

    let (rad, tan): (Vec<f64>, Vec<f64>) = nodes.iter().map(|&r| mf.eigen_raw(r)).unzip();
    mf.ric_minus = rad.iter().zip(&tan).map(|(&a, &b)| (-a.min(b)).max(0.0)).collect();
    mf.rad = rad;
    mf.tan = tan;
    mf.breaks = mf.find_breaks();
    Ok(mf)
}

/// `int_a^b f(r) dr` evaluated in the variable `s = ln r`.
pub(crate) fn log_integral<F: Fn(f64) -> f64 + ?Sized>(f: &F, a: f64, b: f64, tol: Tol) -> f64 {
    if a >= b {
        return 0.0;
    }
    let g = |s: f64| {
        let r = s.exp();
        f(r) * r
    };
    adaptive(&g, a.ln(), b.ln(), tol)
}

fn bisect(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let fa = f(a);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        if (f(m) > 0.0) == (fa > 0.0) {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

impl ModelManifold {
    pub fn n(&self) -> usize {
        self.n
    }
    pub fn profile(&self) -> &WarpingProfile {
        &self.profile
    }
    pub fn grid(&self) -> &LogGrid {
        &self.grid
    }
    pub fn grid_arc(&self) -> Arc<LogGrid> {
        Arc::clone(&self.grid)
    }
    pub fn tol(&self) -> Tol {
        self.tol
    }
    /// Area of the unit `(n-1)`-sphere.
    pub fn omega(&self) -> f64 {
        self.omega
    }
    pub fn r_max(&self) -> f64 {
        self.grid.r_max()
    }
    pub fn w(&self, r: f64) -> f64 {
        self.profile.w(r)
    }
    pub fn w_nodes(&self) -> &[f64] {
        &self.w
    }
    /// `w(r)^{n-1}`.
    pub fn wpow(&self, r: f64) -> f64 {
        self.profile.w(r).powi(self.n as i32 - 1)
    }

    /// Growth exponent `e` of `w^{n-1}` for power tails.
    pub(crate) fn tail_growth(&self) -> Option<f64> {
        match self.profile.tail() {
            Tail::Power { p, .. } => Some(p * (self.n - 1) as f64),
            Tail::Exponential { .. } => None,
        }
    }

    pub fn nonparabolic(&self) -> bool {
        match self.tail_growth() {
            Some(e) => e > 1.0 + 1e-9,
            None => true,
        }
    }

    /// `int_R^inf w^{1-n}` continued with the tail model from `w(R)`.
    pub(crate) fn green_tail(&self, r: f64) -> f64 {
        let wr = self.profile.w(r);
        let m = (self.n - 1) as f64;
        match self.profile.tail() {
            Tail::Power { .. } => {
                let e = self.tail_growth().unwrap();
                wr.powf(-m) * r / (e - 1.0)
            }
            Tail::Exponential { rate, .. } => wr.powf(-m) / (m * rate),
        }
    }

    /// `int_r^inf w^{1-n}`, i.e. `omega G(r)`.
    pub fn green_integral(&self, r: f64) -> Result<f64> {
        let gv = self.green.as_ref().ok_or(Error::Parabolic)?;
        if !(r > 0.0) {
            return Ok(f64::INFINITY);
        }
        let g = &*self.grid;
        let m = self.n as i32 - 1;
        let inv = |t: f64| self.profile.w(t).powi(-m);
        if r >= g.r_max() {
            return Ok(self.green_tail(r));
        }
        if r <= g.r(0) {
            return Ok(gv[0] + log_integral(&inv, r, g.r(0), self.tol));
        }
        let i = g.cell(r);
        Ok(gv[i + 1] + log_integral(&inv, r, g.r(i + 1), self.tol))
    }

    pub fn green_nodes(&self) -> Result<&[f64]> {
        self.green.as_deref().ok_or(Error::Parabolic)
    }

    pub fn volume_nodes(&self) -> &[f64] {
        &self.vol
    }

    /// `V(r)` and `A(r)` of the pole-centred ball.
    pub fn volume_and_area(&self, r: f64) -> Result<(f64, f64)> {
        let g = &*self.grid;
        if !(r > 0.0) || r > g.r_max() * (1.0 + 1e-12) {
            return Err(Error::OutOfGrid { r, r_max: g.r_max() });
        }
        let pw = |t: f64| self.wpow(t);
        let area = self.omega * pw(r);
        let v = if r <= g.r(0) {
            self.omega * adaptive(&pw, 0.0, r, self.tol)
        } else {
            let i = g.cell(r);
            self.vol[i] + self.omega * log_integral(&pw, g.r(i), r, self.tol)
        };
        Ok((v, area))
    }

    fn eigen_raw(&self, r: f64) -> (f64, f64) {
        let [w, _, d2, eps] = self.profile.jet(r);
        let m = (self.n - 1) as f64;
        let k = d2 / w;
        let rad = -m * k;
        // 1 - w'^2 = -eps (2 + eps)
        let tan = -k + (m - 1.0) * (-eps * (2.0 + eps)) / (w * w);
        (rad, tan)
    }

    /// Radial and tangential Ricci eigenvalues at radius `r`; at the pole both
    /// equal `-(n-1) w'''(0)`.
    pub fn ricci_eigenvalues(&self, r: f64) -> Result<(f64, f64)> {
        if r < 0.0 || r.is_nan() {
            return Err(Error::BadParameters(format!("radius {r}")));
        }
        if r == 0.0 {
            let t = self.profile.third_at_pole().ok_or(Error::PoleEvaluation)?;
            let v = -((self.n - 1) as f64) * t;
            return Ok((v, v));
        }
        Ok(self.eigen_raw(r))
    }

    /// `Ric_-` at any `r >= 0`.
    pub fn ric_minus_at(&self, r: f64) -> f64 {
        let (a, b) = if r == 0.0 {
            match self.ricci_eigenvalues(0.0) {
                Ok(v) => v,
                Err(_) => self.eigen_raw(self.grid.r(0)),
            }
        } else {
            self.eigen_raw(r)
        };
        (-a.min(b)).max(0.0)
    }

    fn pole_value(&self, v: &[f64]) -> Option<f64> {
        let _ = v;
        self.profile.third_at_pole().map(|t| -((self.n - 1) as f64) * t)
    }

    pub fn ric_minus(&self) -> RadialField {
        let pole = self.pole_value(&self.ric_minus).map(|v| (-v).max(0.0));
        RadialField::new(self.grid_arc(), self.ric_minus.clone(), None, pole)
    }

    /// Radial and tangential eigenvalues at the grid nodes.
    pub fn ricci_nodes(&self) -> (&[f64], &[f64]) {
        (&self.rad, &self.tan)
    }

    pub fn ric_minus_nodes(&self) -> &[f64] {
        &self.ric_minus
    }

    /// Radii where `Ric_-` is not smooth (switches between zero, the radial
    /// and the tangential eigenvalue).
    pub fn ric_minus_breaks(&self) -> &[f64] {
        &self.breaks
    }

    fn find_breaks(&self) -> Vec<f64> {
        let nodes = self.grid.nodes();
        let gmin = |r: f64| {
            let (a, b) = self.eigen_raw(r);
            a.min(b)
        };
        let diff = |r: f64| {
            let (a, b) = self.eigen_raw(r);
            a - b
        };
        let mut out = Vec::new();
        for i in 0..nodes.len() - 1 {
            let (a, b) = (nodes[i], nodes[i + 1]);
            let g0 = self.rad[i].min(self.tan[i]);
            let g1 = self.rad[i + 1].min(self.tan[i + 1]);
            if (g0 < 0.0) != (g1 < 0.0) {
                out.push(bisect(|r| -gmin(r), a, b));
            }
            let d0 = self.rad[i] - self.tan[i];
            let d1 = self.rad[i + 1] - self.tan[i + 1];
            if (d0 > 0.0) != (d1 > 0.0) && (g0 < 0.0 || g1 < 0.0) && d0 != 0.0 && d1 != 0.0 {
                out.push(bisect(diff, a, b));
            }
        }
        out.sort_by(|x, y| x.partial_cmp(y).unwrap());
        out.dedup();
        out
    }

    /// Asymptotic volume ratio from the tail power fit at `R_max`:
    /// `+inf` for super-linear growth, `0` for sub-linear.
    pub fn asymptotic_volume_ratio(&self) -> Result<f64> {
        let r = self.r_max();
        match self.profile.tail() {
            Tail::Exponential { .. } => Ok(f64::INFINITY),
            Tail::Power { p, .. } => {
                let [w, d1, _, _] = self.profile.jet(r);
                let p_hat = r * d1 / w;
                if !((p_hat - p).abs() <= 0.05) {
                    return Err(Error::TailUnresolved(format!("fitted exponent {p_hat} vs declared {p}")));
                }
                if p > 1.0 + 1e-12 {
                    Ok(f64::INFINITY)
                } else if p < 1.0 - 1e-12 {
                    Ok(0.0)
                } else {
                    Ok(self.omega * d1.powi(self.n as i32 - 1) / self.n as f64)
                }
            }
        }
    }

    /// Envelope `lambda`, decay fit `(K, alpha)` and `b0`.
    pub fn curvature_envelope(&self) -> Result<CurvatureReport> {
        let n1 = (self.n - 1) as f64;
        let rm = &self.ric_minus;
        if rm.iter().any(|v| v.is_nan()) {
            return Err(Error::FitFailed("curvature is not finite on the grid".into()));
        }
        let g = &*self.grid;
        let nn = g.len();
        let pole = self.pole_value(rm);
        let rm_pole = pole.map(|v| (-v).max(0.0));

        // Decay exponent of Ric_- at the end of the grid.
        let last = rm[nn - 1];
        let q = if last > 0.0 && rm[nn - 2] > 0.0 { (last / rm[nn - 2]).ln() / g.h() } else { f64::NEG_INFINITY };

        let mut lam = vec![0.0; nn];
        let mut run = 0.0f64;
        for i in (0..nn).rev() {
            run = run.max(rm[i] / n1);
            lam[i] = run;
        }
        let lambda0 = rm_pole.map_or(lam[0], |p| lam[0].max(p / n1));

        // b0 = int s lambda(s) ds with lambda piecewise linear between nodes.
        let mut b0 = 0.5 * lambda0 * g.r(0) * g.r(0);
        for i in 0..nn - 1 {
            let (a, b) = (g.r(i), g.r(i + 1));
            let (la, lb) = (lam[i], lam[i + 1]);
            let slope = (lb - la) / (b - a);
            b0 += la * (b * b - a * a) / 2.0 + slope * ((b.powi(3) - a.powi(3)) / 3.0 - a * (b * b - a * a) / 2.0);
        }
        // Beyond R_max, lambda follows Ric_- ~ r^q.
        if last > 0.0 {
            let r = g.r_max();
            if q < -2.0 - 1e-3 {
                b0 += last / n1 * r * r / (-q - 2.0);
            } else {
                b0 = f64::INFINITY;
            }
        }

        // (K, alpha) fit on the alpha grid; ties go to larger alpha.
        let mut best_k = f64::INFINITY;
        let mut best_a = 2.0;
        let steps = (6 * self.n - 2) * 16;
        for s in 0..=steps {
            let alpha = 2.0 + s as f64 / 16.0;
            let mut k = rm_pole.unwrap_or(0.0) / n1;
            for i in 0..nn {
                if rm[i] > 0.0 {
                    k = k.max(rm[i] * (1.0 + g.r(i).powf(alpha)) / n1);
                }
            }
            if last > 0.0 && q + alpha > -1e-9 {
                k = f64::INFINITY;
            }
            if k.is_finite() && k <= best_k * (1.0 + 1e-12) {
                best_k = k;
                best_a = alpha;
            }
        }

        let field = |v: &Vec<f64>, p: Option<f64>| RadialField::new(self.grid_arc(), v.clone(), None, p);
        Ok(CurvatureReport {
            ric_radial: field(&self.rad, pole),
            ric_tangential: field(&self.tan, pole),
            ric_minus: field(rm, rm_pole),
            lambda: field(&lam, Some(lambda0)),
            k: best_k,
            alpha: best_a,
            b0,
            lambda_at_pole: lambda0,
        })
    }

    /// `V(R)/V(r) - e^{(n-1) b0} (R/r)^n`; non-positive by Bishop–Gromov.
    pub fn bishop_gromov_check(&self, r: f64, big_r: f64) -> Result<f64> {
        if !(r > 0.0 && r <= big_r) {
            return Err(Error::BadParameters(format!("need 0 < r <= R, got r = {r}, R = {big_r}")));
        }
        let env = self.curvature_envelope()?;
        if !env.b0.is_finite() {
            return Err(Error::EnvelopeDivergent);
        }
        self.bishop_gromov_residual(r, big_r, env.b0)
    }

    pub(crate) fn bishop_gromov_residual(&self, r: f64, big_r: f64, b0: f64) -> Result<f64> {
        let (vr, _) = self.volume_and_area(r)?;
        let (vbig, _) = self.volume_and_area(big_r)?;
        let n = self.n as f64;
        Ok(vbig / vr - ((n - 1.0) * b0).exp() * (big_r / r).powf(n))
    }

    /// `int_a^b f` split at grid nodes, each piece integrated in `ln r`.
    pub fn integrate<F: Fn(f64) -> f64 + ?Sized>(&self, f: &F, a: f64, b: f64) -> f64 {
        if !(a < b) {
            return 0.0;
        }
        let g = &*self.grid;
        let mut total = 0.0;
        let mut lo = a;
        if lo < g.r(0) {
            let hi = b.min(g.r(0));
            total += adaptive(f, lo, hi, self.tol);
            lo = hi;
        }
        if lo >= b {
            return total;
        }
        let start = g.cell(lo);
        let mut i = start + 1;
        while i < g.len() && g.r(i) < b {
            total += log_integral(f, lo, g.r(i), self.tol);
            lo = g.r(i);
            i += 1;
        }
        total + log_integral(f, lo, b, self.tol)
    }
}

/// Output of [`ModelManifold::curvature_envelope`].
#[derive(Debug, Clone)]
pub struct CurvatureReport {
    pub ric_radial: RadialField,
    pub ric_tangential: RadialField,
    pub ric_minus: RadialField,
    /// Minimal non-increasing function with `(n-1) lambda >= Ric_-`.
    pub lambda: RadialField,
    /// Minimal `K` with `Ric_- <= (n-1) K / (1 + r^alpha)`; infinite if no
    /// alpha on the search grid works.
    pub k: f64,
    pub alpha: f64,
    pub b0: f64,
    /// `lambda(0)`, taken as the supremum of the envelope.
    pub lambda_at_pole: f64,
}

impl CurvatureReport {
    pub fn b0_finite(&self) -> bool {
        self.b0.is_finite()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn euclid(n: usize) -> ModelManifold {
        build_manifold(n, WarpingProfile::euclidean(), GridSpec::default()).unwrap()
    }

    fn hyper() -> ModelManifold {
        let p = WarpingProfile::hyperbolic(1.0).unwrap();
        let g = GridSpec::for_profile(&p);
        build_manifold(3, p, g).unwrap()
    }

    #[test]
    fn validation_errors() {
        let e = build_manifold(2, WarpingProfile::euclidean(), GridSpec::default()).unwrap_err();
        assert_eq!(e, Error::DimensionTooLow(2));
        let r: Vec<f64> = (0..50).map(|k| k as f64 * 0.5).collect();
        let w: Vec<f64> = r.iter().map(|x| x + 0.1).collect();
        let p = WarpingProfile::tabulated(r, w, Tail::Power { p: 1.0, c: 1.0 }).unwrap();
        let e = build_manifold(3, p, GridSpec::default()).unwrap_err();
        assert!(matches!(e, Error::PoleConditionViolated(_)));
    }

    #[test]
    fn nonpositive_warp_is_rejected() {
        // w = sin r on the samples: vanishes at pi.
        let r: Vec<f64> = (0..200).map(|k| k as f64 * 0.05).collect();
        let w: Vec<f64> = r.iter().map(|x| x.sin()).collect();
        let p = WarpingProfile::tabulated(r, w, Tail::Power { p: 1.0, c: 1.0 }).unwrap();
        let e = build_manifold(3, p, GridSpec::default()).unwrap_err();
        assert!(matches!(e, Error::NonPositiveWarp(_)), "{e:?}");
    }

    #[test]
    fn flat_and_hyperbolic_curvature() {
        let m = euclid(3);
        assert_eq!(m.ricci_eigenvalues(2.0).unwrap(), (0.0, 0.0));
        let h = hyper();
        let (a, b) = h.ricci_eigenvalues(1.0).unwrap();
        assert!((a + 2.0).abs() < 1e-13 && (b + 2.0).abs() < 1e-12);
        assert!(h.ric_minus().values().iter().all(|v| (v - 2.0).abs() < 1e-9));
        assert_eq!(h.ricci_eigenvalues(0.0).unwrap(), (-2.0, -2.0));
    }

    #[test]
    fn volumes() {
        let (v, a) = euclid(3).volume_and_area(1.0).unwrap();
        assert!((v - 4.0 * PI / 3.0).abs() < 1e-12 && (a - 4.0 * PI).abs() < 1e-12);
        let (v, a) = euclid(4).volume_and_area(2.0).unwrap();
        assert!((v / (8.0 * PI * PI) - 1.0).abs() < 1e-12 && (a / (16.0 * PI * PI) - 1.0).abs() < 1e-12);
        let (v, _) = hyper().volume_and_area(1.0).unwrap();
        let exact = 4.0 * PI * (2f64.sinh() / 4.0 - 0.5);
        assert!((v / exact - 1.0).abs() < 1e-12);
        assert!(matches!(euclid(3).volume_and_area(2e4), Err(Error::OutOfGrid { .. })));
    }

    #[test]
    fn avr_cases() {
        assert!((euclid(3).asymptotic_volume_ratio().unwrap() - 4.0 * PI / 3.0).abs() < 1e-12);
        let c = build_manifold(3, WarpingProfile::cone(0.5).unwrap(), GridSpec::default()).unwrap();
        assert!((c.asymptotic_volume_ratio().unwrap() / (PI / 3.0) - 1.0).abs() < 1e-10);
        assert!(hyper().asymptotic_volume_ratio().unwrap().is_infinite());
    }

    #[test]
    fn envelopes() {
        let e = euclid(3).curvature_envelope().unwrap();
        assert_eq!((e.k, e.b0), (0.0, 0.0));
        assert!(e.lambda.values().iter().all(|&v| v == 0.0));
        let h = hyper().curvature_envelope().unwrap();
        assert!(h.b0.is_infinite() && h.k.is_infinite());
        assert!(h.lambda.values().iter().all(|v| (v - 1.0).abs() < 1e-9));
    }

    #[test]
    fn bishop_gromov() {
        let r = euclid(3).bishop_gromov_check(1.0, 2.0).unwrap();
        assert!(r.abs() < 1e-10);
        let c = build_manifold(3, WarpingProfile::cone(0.5).unwrap(), GridSpec::default()).unwrap();
        assert!(c.bishop_gromov_check(1.0, 3.0).unwrap() < 0.0);
        assert!(c.bishop_gromov_check(2.0, 2.0).unwrap() <= 0.0);
        assert_eq!(hyper().bishop_gromov_check(1.0, 2.0).unwrap_err(), Error::EnvelopeDivergent);
    }

    #[test]
    fn integrate_matches_closed_form() {
        let m = euclid(3);
        let v = m.integrate(&|r: f64| r * r, 1e-7, 3.7);
        assert!((v - 3.7f64.powi(3) / 3.0).abs() < 1e-11);
    }
}
