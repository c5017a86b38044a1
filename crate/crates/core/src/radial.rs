//! Pole Green kernel, radial inverse Laplacian, elliptic Kato constant,
//! gauge function and the checks built on them.

use crate::error::{Error, Result};
use crate::geometry::{log_integral, ModelManifold};
use crate::grid::RadialField;
use crate::profile::Tail;
use crate::quad::{adaptive, gk15, stencil_derivative, Tol};
use crate::radial_fn::RadialFn;
use rayon::prelude::*;

const DIVERGENCE_EPS: f64 = 1e-3;

/// `G(r) = (1/omega) int_r^inf w^{1-n}` and its derivative.
#[derive(Debug, Clone)]
pub struct GreenKernel {
    pub g: RadialField,
    pub dg: RadialField,
    pub nonparabolic: bool,
    pub omega: f64,
    /// `sup |d/d(ln r) (w^{n-1} G')| / sup |w^{n-1} G'|`, from differences of `G`.
    pub harmonicity_residual: f64,
}

/// Result of the radial inverse Laplacian `u = 𝒢[h]`, solving
/// `-(w^{n-1} u')' = w^{n-1} h`, `u(inf) = 0`.
#[derive(Debug, Clone)]
pub struct Potential {
    /// Values with exact slopes `u' = -w^{1-n} J` and the pole value.
    pub u: RadialField,
    /// `J(r_i) = int_0^{r_i} h w^{n-1}`.
    pub flux: Vec<f64>,
    pub pole: f64,
}

impl Potential {
    pub fn sup(&self) -> f64 {
        self.u.sup()
    }
}

#[derive(Debug, Clone)]
pub struct KatoReport {
    pub k_infty: f64,
    pub u: RadialField,
    pub argmax_radius: f64,
    pub gauge_feasible: bool,
    pub gamma: f64,
}

#[derive(Debug, Clone)]
pub struct GaugeFunction {
    pub phi: RadialField,
    /// `f = ln(phi) / (n-2)` with exact slopes.
    pub f: RadialField,
    pub iterations: usize,
    /// `sup |Δφ + (n-2) Ric_- φ|` over the grid.
    pub residual: f64,
    pub gamma: f64,
    pub k_infty: f64,
}

#[derive(Debug, Clone)]
pub struct LiYauReport {
    /// `sup_r G(r) / int_r^inf t/V(t) dt`.
    pub implied_constant: f64,
    pub min_ratio: f64,
}

impl LiYauReport {
    /// Relative spread `(max - min) / max` of the ratio over the grid.
    pub fn spread(&self) -> f64 {
        (self.implied_constant - self.min_ratio) / self.implied_constant
    }
}

#[derive(Debug, Clone)]
pub struct PoissonResult {
    pub phi_h: RadialField,
    pub sup_norm: f64,
    /// `sup |-Δφ_h - h|` away from discontinuities of `h`.
    pub residual: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct EnergyReport {
    /// `int_{M \ B_r} |∇G|^2`.
    pub energy: f64,
    /// `4 G(r)`.
    pub bound: f64,
    pub green: f64,
}

impl EnergyReport {
    pub fn identity_error(&self) -> f64 {
        (self.energy / self.green - 1.0).abs()
    }
}

fn inner_tol() -> Tol {
    Tol { rel: 1e-12, abs: 1e-300, max_depth: 30 }
}

/// `int_a^b f` in `ln r`, split at the breakpoints inside `(a, b)`.
fn split_log<F: Fn(f64) -> f64 + ?Sized>(f: &F, a: f64, b: f64, breaks: &[f64], tol: Tol) -> f64 {
    let mut lo = a;
    let mut acc = 0.0;
    for &x in breaks {
        if x > lo && x < b {
            acc += log_integral(f, lo, x, tol);
            lo = x;
        }
    }
    acc + log_integral(f, lo, b, tol)
}

fn split_lin<F: Fn(f64) -> f64 + ?Sized>(f: &F, a: f64, b: f64, breaks: &[f64], tol: Tol) -> f64 {
    crate::quad::adaptive_split(f, a, b, breaks, tol)
}

/// Radial inverse Laplacian of a non-negative source `h` with known
/// non-smooth points `breaks`.
pub fn inverse_laplacian<F>(m: &ModelManifold, h: &F, breaks: &[f64]) -> Result<Potential>
where
    F: Fn(f64) -> f64 + Sync,
{
    if !m.nonparabolic() {
        return Err(Error::Parabolic);
    }
    let g = m.grid();
    let nodes = g.nodes();
    let nn = nodes.len();
    let np = m.n() as i32 - 1;
    let tol = m.tol();
    let it = inner_tol();
    let src = |r: f64| h(r) * m.wpow(r);

    let incr: Vec<f64> = (0..nn - 1)
        .into_par_iter()
        .map(|i| split_log(&src, nodes[i], nodes[i + 1], breaks, tol))
        .collect();
    let mut flux = vec![0.0; nn];
    flux[0] = split_lin(&src, 0.0, nodes[0], breaks, tol);
    for i in 0..nn - 1 {
        flux[i + 1] = flux[i] + incr[i];
    }

    // Fubini: u(r) = W(r) J(r) + int_r^inf W h w^{n-1}, W(s) = int_s^inf w^{1-n}.
    let wn = m.green_nodes()?;
    let inv = |t: f64| m.w(t).powi(-np) * t;
    let w_in_cell = |s: f64, i: usize| {
        if s >= nodes[i + 1] {
            return wn[i + 1];
        }
        wn[i + 1] + gk15(&|x: f64| inv(x.exp()), s.ln(), nodes[i + 1].ln()).0
    };
    let cells: Vec<f64> = (0..nn - 1)
        .into_par_iter()
        .map(|i| {
            let f = |t: f64| src(t) * w_in_cell(t, i);
            split_log(&f, nodes[i], nodes[i + 1], breaks, tol)
        })
        .collect();

    let tail = potential_tail(m, h, flux[nn - 1])?;
    let mut k = vec![0.0; nn];
    k[nn - 1] = tail - wn[nn - 1] * flux[nn - 1];
    for i in (0..nn - 1).rev() {
        k[i] = k[i + 1] + cells[i];
    }
    let u: Vec<f64> = (0..nn).map(|i| wn[i] * flux[i] + k[i]).collect();
    let near_pole = |t: f64| {
        let w = wn[0] + log_integral(&|x: f64| m.w(x).powi(-np), t, nodes[0], it);
        src(t) * w
    };
    let pole = k[0] + split_lin(&near_pole, 0.0, nodes[0], breaks, tol);
    let slopes: Vec<f64> = (0..nn).map(|i| -m.w_nodes()[i].powi(-np) * flux[i]).collect();
    let field = RadialField::new(m.grid_arc(), u, Some(slopes), Some(pole));
    Ok(Potential { u: field, flux, pole })
}

/// `int_R^inf w^{1-n} J` for the tail models of `w` and `h`.
fn potential_tail<F: Fn(f64) -> f64>(m: &ModelManifold, h: &F, j_r: f64) -> Result<f64> {
    let r = m.r_max();
    let hr = h(r);
    let h99 = h(0.99 * r);
    let tail_zero = hr == 0.0 || h99 <= 0.0;
    let nm = (m.n() - 1) as f64;
    let wr = m.w(r);
    match m.profile().tail() {
        Tail::Exponential { .. } => {
            if tail_zero {
                Ok(j_r * m.green_tail(r))
            } else {
                Err(Error::Divergent("source does not vanish where volume grows exponentially".into()))
            }
        }
        Tail::Power { p, .. } => {
            let e = p * nm;
            if tail_zero {
                if -e > -1.0 - DIVERGENCE_EPS {
                    return Err(Error::Divergent(format!("outer integrand decays like r^{}", -e)));
                }
                return Ok(j_r * m.green_tail(r));
            }
            let q = (hr / h99).ln() / (1.0f64 / 0.99).ln();
            let rate = (-e).max(q + 1.0);
            if rate > -1.0 - DIVERGENCE_EPS {
                return Err(Error::Divergent(format!("outer integrand decays like r^{rate:.4}")));
            }
            let mm = q + e + 1.0;
            let wp = wr.powf(nm);
            let b = if mm.abs() < 1e-12 { 0.0 } else { hr * wp * r / mm };
            Ok(wr.powf(-nm) * r * ((j_r - b) / (e - 1.0) + b / (-q - 2.0)))
        }
    }
}

pub fn green_pole(m: &ModelManifold) -> Result<GreenKernel> {
    let wn = m.green_nodes()?;
    let omega = m.omega();
    let np = m.n() as i32 - 1;
    let g: Vec<f64> = wn.iter().map(|v| v / omega).collect();
    let dg: Vec<f64> = m.w_nodes().iter().map(|w| -w.powi(-np) / omega).collect();
    let grid = m.grid();
    let h = grid.h();
    let n = grid.len();
    // Flux from differences of G (not the exact slopes), then its log-derivative.
    let flux: Vec<f64> = (0..n)
        .map(|i| m.w_nodes()[i].powi(np) * stencil_derivative(&g, h, i, &[]) / grid.r(i))
        .collect();
    let fmax = flux.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let res = (0..n).map(|i| stencil_derivative(&flux, h, i, &[]).abs()).fold(0.0, f64::max);
    Ok(GreenKernel {
        g: RadialField::new(m.grid_arc(), g, Some(dg.clone()), None),
        dg: RadialField::new(m.grid_arc(), dg, None, None),
        nonparabolic: true,
        omega,
        harmonicity_residual: res / fmax,
    })
}

impl ModelManifold {
    /// Pole Green kernel `G(r)` at any `r > 0`.
    pub fn green_value(&self, r: f64) -> Result<f64> {
        Ok(self.green_integral(r)? / self.omega())
    }
}

/// `int_R^inf t / V(t) dt` with the tail model of the volume.
fn li_yau_tail(m: &ModelManifold) -> Result<f64> {
    let r = m.r_max();
    let (vr, _) = m.volume_and_area(r)?;
    let om = m.omega();
    let nm = (m.n() - 1) as f64;
    let wp = m.w(r).powf(nm);
    let tol = Tol::rel(1e-12);
    match m.profile().tail() {
        Tail::Power { p, .. } => {
            let e = p * nm;
            let vol = |t: f64| vr + om * wp * r * ((t / r).powf(e + 1.0) - 1.0) / (e + 1.0);
            let f = |s: f64| {
                let t = r * s.exp();
                t * t / vol(t)
            };
            let smax = (60.0 / (e - 1.0)).min(700.0);
            Ok(adaptive(&f, 0.0, smax, tol))
        }
        Tail::Exponential { rate, .. } => {
            let k = nm * rate;
            let vol = |t: f64| vr + om * wp * (((t - r) * k).exp() - 1.0) / k;
            let f = |t: f64| t / vol(t);
            Ok(adaptive(&f, r, r + 60.0 / k, tol))
        }
    }
}

pub fn li_yau_check(m: &ModelManifold) -> Result<LiYauReport> {
    let gk = green_pole(m)?;
    let g = m.grid();
    let nodes = g.nodes();
    let nn = nodes.len();
    let tol = m.tol();
    let f = |t: f64| t / m.volume_and_area(t).map(|v| v.0).unwrap_or(f64::NAN);
    let incr: Vec<f64> = (0..nn - 1).into_par_iter().map(|i| log_integral(&f, nodes[i], nodes[i + 1], tol)).collect();
    let mut t = vec![0.0; nn];
    t[nn - 1] = li_yau_tail(m)?;
    for i in (0..nn - 1).rev() {
        t[i] = t[i + 1] + incr[i];
    }
    let mut lo = f64::INFINITY;
    let mut hi = 0.0f64;
    for i in 0..nn {
        let q = gk.g.value(i) / t[i];
        lo = lo.min(q);
        hi = hi.max(q);
    }
    Ok(LiYauReport { implied_constant: hi, min_ratio: lo })
}

/// Exact `k_infty = sup_r 𝒢[Ric_-](r)`.
pub fn kato_constant(m: &ModelManifold) -> Result<KatoReport> {
    let rm = |r: f64| m.ric_minus_at(r);
    let pot = inverse_laplacian(m, &rm, m.ric_minus_breaks())?;
    let mut k = pot.pole;
    let mut arg = 0.0;
    for (i, &v) in pot.u.values().iter().enumerate() {
        if v > k {
            k = v;
            arg = m.grid().r(i);
        }
    }
    let lam = (m.n() - 2) as f64;
    let feasible = lam * k < 1.0;
    Ok(KatoReport {
        k_infty: k,
        u: pot.u,
        argmax_radius: arg,
        gauge_feasible: feasible,
        gamma: if feasible { 1.0 / (1.0 - lam * k) } else { f64::INFINITY },
    })
}

/// Fixed point of `φ = 1 + (n-2) 𝒢[Ric_- φ]`.
pub fn gauge_solve(m: &ModelManifold) -> Result<GaugeFunction> {
    let kato = kato_constant(m)?;
    let lam = (m.n() - 2) as f64;
    if !kato.gauge_feasible {
        return Err(Error::NotGaugeable(lam * kato.k_infty));
    }
    let grid = m.grid();
    let nn = grid.len();
    let np = m.n() as i32 - 1;
    let breaks = m.ric_minus_breaks();
    let mut phi = RadialField::new(m.grid_arc(), vec![1.0; nn], Some(vec![0.0; nn]), Some(1.0));
    let mut flux = vec![0.0; nn];
    let mut iterations = 0;
    let mut change = f64::INFINITY;
    while iterations < 1000 {
        iterations += 1;
        let cur = &phi;
        let src = |r: f64| m.ric_minus_at(r) * cur.eval(r);
        let pot = inverse_laplacian(m, &src, breaks)?;
        let vals: Vec<f64> = pot.u.values().iter().map(|v| 1.0 + lam * v).collect();
        let slopes: Vec<f64> = pot.u.slopes().unwrap().iter().map(|s| lam * s).collect();
        let pole = 1.0 + lam * pot.pole;
        change = vals
            .iter()
            .zip(phi.values())
            .map(|(a, b)| (a - b).abs())
            .fold((pole - phi.pole().unwrap()).abs(), f64::max);
        phi = RadialField::new(m.grid_arc(), vals, Some(slopes), Some(pole));
        flux = pot.flux;
        if change < 1e-10 {
            break;
        }
    }
    if change >= 1e-10 {
        return Err(Error::NoConvergence { iterations, change });
    }

    let barriers = grid.barrier_cells(breaks);
    let h = grid.h();
    let rmn = m.ric_minus_nodes();
    let mut residual = 0.0f64;
    for i in 0..nn {
        let dj = stencil_derivative(&flux, h, i, &barriers) / grid.r(i);
        let lap = -lam * m.w_nodes()[i].powi(-np) * dj;
        residual = residual.max((lap + lam * rmn[i] * phi.value(i)).abs());
    }

    let fvals: Vec<f64> = phi.values().iter().map(|p| p.ln() / lam).collect();
    let fslopes: Vec<f64> = (0..nn).map(|i| phi.slopes().unwrap()[i] / (lam * phi.value(i))).collect();
    let fpole = phi.pole().unwrap().ln() / lam;
    let f = RadialField::new(m.grid_arc(), fvals, Some(fslopes), Some(fpole));
    Ok(GaugeFunction { phi, f, iterations, residual, gamma: kato.gamma, k_infty: kato.k_infty })
}

/// Minimum over the grid of the smaller eigenvalue of
/// `Ric - Δf g - (n-2) df ⊗ df` for the gauge `f`.
pub fn conformal_bakry_emery_check(m: &ModelManifold, gauge: &GaugeFunction) -> Result<f64> {
    let grid = m.grid();
    let nn = grid.len();
    let lam = (m.n() - 2) as f64;
    let nm = (m.n() - 1) as f64;
    let fp = gauge.f.slopes().ok_or_else(|| Error::BadParameters("gauge without slopes".into()))?;
    let barriers = grid.barrier_cells(m.ric_minus_breaks());
    let (rad, tan) = m.ricci_nodes();
    let mut min_eig = f64::INFINITY;
    for i in 0..nn {
        let r = grid.r(i);
        let fpp = stencil_derivative(fp, grid.h(), i, &barriers) / r;
        let [w, w1, _, _] = m.profile().jet(r);
        let lap = fpp + nm * w1 / w * fp[i];
        let e_rad = rad[i] - lap - lam * fp[i] * fp[i];
        let e_tan = tan[i] - lap;
        min_eig = min_eig.min(e_rad.min(e_tan));
    }
    Ok(min_eig)
}

/// Bounded solution `φ_h = 𝒢[h]` of `-Δφ_h = h`.
pub fn poisson_bounded(m: &ModelManifold, h: &RadialFn) -> Result<PoissonResult> {
    let breaks = h.breaks();
    let src = |r: f64| h.eval(r);
    let pot = inverse_laplacian(m, &src, &breaks)?;
    let grid = m.grid();
    let barriers = grid.barrier_cells(&breaks);
    let np = m.n() as i32 - 1;
    let mut residual = 0.0f64;
    for i in 0..grid.len() {
        let r = grid.r(i);
        if breaks.iter().any(|&b| (b - r).abs() <= 1e-12 * r) {
            continue;
        }
        let dj = stencil_derivative(&pot.flux, grid.h(), i, &barriers) / r;
        residual = residual.max((m.w_nodes()[i].powi(-np) * dj - h.eval(r)).abs());
    }
    let sup_norm = pot.u.values().iter().fold(pot.pole.abs(), |a, v| a.max(v.abs()));
    Ok(PoissonResult { phi_h: pot.u, sup_norm, residual })
}

/// Dirichlet energy of `G` outside `B_r` against `4 G(r)`.
pub fn energy_identity_check(m: &ModelManifold, r: f64) -> Result<EnergyReport> {
    if !m.nonparabolic() {
        return Err(Error::Parabolic);
    }
    if !(r > 0.0) {
        return Err(Error::BadParameters(format!("radius {r}")));
    }
    let om = m.omega();
    let np = m.n() as i32 - 1;
    let dens = |t: f64| {
        let wp = m.wpow(t);
        let dg = -m.w(t).powi(-np) / om;
        dg * dg * om * wp
    };
    let rm = m.r_max();
    let energy = if r < rm { m.integrate(&dens, r, rm) + m.green_tail(rm) / om } else { m.green_tail(r) / om };
    let green = m.green_value(r)?;
    Ok(EnergyReport { energy, bound: 4.0 * green, green })
}
