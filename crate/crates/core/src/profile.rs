//! Warping profiles `w(r)` of rotationally symmetric metrics
//! `dr^2 + w(r)^2 g_{S^{n-1}}`.

use crate::error::{Error, Result};
use crate::quad::fornberg;
use sha2::{Digest, Sha256};
use std::sync::Arc;

/// Asymptotic form of `w` used for tails beyond the truncation radius.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Tail {
    /// `w(r) ~ c r^p`.
    Power { p: f64, c: f64 },
    /// `w(r) ~ c e^{rate r}`.
    Exponential { rate: f64, c: f64 },
}

impl Tail {
    pub fn eval(&self, r: f64) -> f64 {
        match *self {
            Tail::Power { p, c } => c * r.powf(p),
            Tail::Exponential { rate, c } => c * (rate * r).exp(),
        }
    }
}

/// Clamped cubic spline through tabulated samples.
#[derive(Debug, Clone, PartialEq)]
pub struct Spline {
    x: Vec<f64>,
    y: Vec<f64>,
    m: Vec<f64>,
}

impl Spline {
    /// End slopes come from one-sided four-point stencils.
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        let n = x.len();
        if n < 4 || y.len() != n {
            return Err(Error::BadParameters("tabulated profile needs at least 4 samples".into()));
        }
        if x.windows(2).any(|p| !(p[1] > p[0])) {
            return Err(Error::BadParameters("tabulated radii must be strictly increasing".into()));
        }
        let d0 = {
            let w = fornberg(x[0], &x[0..4], 1);
            (0..4).map(|k| w[1][k] * y[k]).sum::<f64>()
        };
        let dn = {
            let w = fornberg(x[n - 1], &x[n - 4..n], 1);
            (0..4).map(|k| w[1][k] * y[n - 4 + k]).sum::<f64>()
        };
        // Tridiagonal system for second derivatives (clamped ends).
        let mut a = vec![0.0; n];
        let mut b = vec![0.0; n];
        let mut c = vec![0.0; n];
        let mut rhs = vec![0.0; n];
        let h0 = x[1] - x[0];
        b[0] = h0 / 3.0;
        c[0] = h0 / 6.0;
        rhs[0] = (y[1] - y[0]) / h0 - d0;
        for i in 1..n - 1 {
            let hl = x[i] - x[i - 1];
            let hr = x[i + 1] - x[i];
            a[i] = hl / 6.0;
            b[i] = (hl + hr) / 3.0;
            c[i] = hr / 6.0;
            rhs[i] = (y[i + 1] - y[i]) / hr - (y[i] - y[i - 1]) / hl;
        }
        let hn = x[n - 1] - x[n - 2];
        a[n - 1] = hn / 6.0;
        b[n - 1] = hn / 3.0;
        rhs[n - 1] = dn - (y[n - 1] - y[n - 2]) / hn;
        for i in 1..n {
            let w = a[i] / b[i - 1];
            b[i] -= w * c[i - 1];
            rhs[i] -= w * rhs[i - 1];
        }
        let mut m = vec![0.0; n];
        m[n - 1] = rhs[n - 1] / b[n - 1];
        for i in (0..n - 1).rev() {
            m[i] = (rhs[i] - c[i] * m[i + 1]) / b[i];
        }
        Ok(Spline { x, y, m })
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }
    pub fn y(&self) -> &[f64] {
        &self.y
    }

    fn locate(&self, r: f64) -> usize {
        match self.x.binary_search_by(|v| v.partial_cmp(&r).unwrap()) {
            Ok(i) => i.min(self.x.len() - 2),
            Err(i) => i.saturating_sub(1).min(self.x.len() - 2),
        }
    }

    /// Value and first three derivatives.
    pub fn eval(&self, r: f64) -> [f64; 4] {
        let i = self.locate(r);
        let (x0, x1) = (self.x[i], self.x[i + 1]);
        let h = x1 - x0;
        let (a, b) = ((x1 - r) / h, (r - x0) / h);
        let (m0, m1) = (self.m[i], self.m[i + 1]);
        let (y0, y1) = (self.y[i], self.y[i + 1]);
        let v = a * y0 + b * y1 + ((a * a * a - a) * m0 + (b * b * b - b) * m1) * h * h / 6.0;
        let d1 = (y1 - y0) / h + ((1.0 - 3.0 * a * a) * m0 + (3.0 * b * b - 1.0) * m1) * h / 6.0;
        let d2 = a * m0 + b * m1;
        let d3 = (m1 - m0) / h;
        [v, d1, d2, d3]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ProfileKind {
    /// `w = r`.
    Euclidean,
    /// `w = sinh(kappa r) / kappa`, sectional curvature `-kappa^2`.
    Hyperbolic { kappa: f64 },
    /// Cone of slope `a`, smoothed at the pole: `w = a r + (1 - a) tanh r`.
    Cone { a: f64 },
    /// Euclidean base plus a compactly concentrated bump:
    /// `w = r + amplitude r^3 exp(-(r/width)^2)`.
    Perturbed { amplitude: f64, width: f64 },
    /// Cubic interpolation of samples starting at `r = 0`.
    Tabulated(Arc<Spline>),
    /// `s w(r/s)` for an inner profile `w`.
    Scaled { factor: f64, inner: Box<WarpingProfile> },
}

/// A warping function with derivative accessors and tail metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct WarpingProfile {
    kind: ProfileKind,
    tail: Tail,
}

impl WarpingProfile {
    pub fn euclidean() -> Self {
        WarpingProfile { kind: ProfileKind::Euclidean, tail: Tail::Power { p: 1.0, c: 1.0 } }
    }

    pub fn hyperbolic(kappa: f64) -> Result<Self> {
        if !(kappa > 0.0) {
            return Err(Error::BadParameters("hyperbolic kappa must be positive".into()));
        }
        Ok(WarpingProfile {
            kind: ProfileKind::Hyperbolic { kappa },
            tail: Tail::Exponential { rate: kappa, c: 0.5 / kappa },
        })
    }

    pub fn cone(a: f64) -> Result<Self> {
        if !(a > 0.0 && a <= 1.0) {
            return Err(Error::BadParameters("cone slope must lie in (0, 1]".into()));
        }
        Ok(WarpingProfile { kind: ProfileKind::Cone { a }, tail: Tail::Power { p: 1.0, c: a } })
    }

    pub fn perturbed(amplitude: f64, width: f64) -> Result<Self> {
        if !(width > 0.0) || !amplitude.is_finite() {
            return Err(Error::BadParameters("perturbed profile needs width > 0".into()));
        }
        Ok(WarpingProfile {
            kind: ProfileKind::Perturbed { amplitude, width },
            tail: Tail::Power { p: 1.0, c: 1.0 },
        })
    }

    /// The default bump `w = r + 0.1 r^3 e^{-r^2}`.
    pub fn standard_perturbed() -> Self {
        Self::perturbed(0.1, 1.0).unwrap()
    }

    pub fn tabulated(r: Vec<f64>, w: Vec<f64>, tail: Tail) -> Result<Self> {
        let s = Spline::new(r, w)?;
        Ok(WarpingProfile { kind: ProfileKind::Tabulated(Arc::new(s)), tail })
    }

    /// `s w(r/s)`: the metric scaled by `s^2`.
    pub fn scaled(self, factor: f64) -> Result<Self> {
        if !(factor > 0.0) {
            return Err(Error::BadParameters("scale factor must be positive".into()));
        }
        let tail = match self.tail {
            Tail::Power { p, c } => Tail::Power { p, c: c * factor.powf(1.0 - p) },
            Tail::Exponential { rate, c } => Tail::Exponential { rate: rate / factor, c: c * factor },
        };
        Ok(WarpingProfile { kind: ProfileKind::Scaled { factor, inner: Box::new(self) }, tail })
    }

    pub fn with_tail(mut self, tail: Tail) -> Self {
        self.tail = tail;
        self
    }

    pub fn kind(&self) -> &ProfileKind {
        &self.kind
    }
    pub fn tail(&self) -> Tail {
        self.tail
    }

    pub fn is_tabulated(&self) -> bool {
        match &self.kind {
            ProfileKind::Tabulated(_) => true,
            ProfileKind::Scaled { inner, .. } => inner.is_tabulated(),
            _ => false,
        }
    }

    pub fn w(&self, r: f64) -> f64 {
        self.jet(r)[0]
    }
    pub fn dw(&self, r: f64) -> f64 {
        self.jet(r)[1]
    }
    pub fn d2w(&self, r: f64) -> f64 {
        self.jet(r)[2]
    }

    /// `[w, w', w'', w' - 1]`; the last entry is computed without cancellation.
    pub fn jet(&self, r: f64) -> [f64; 4] {
        match &self.kind {
            ProfileKind::Euclidean => [r, 1.0, 0.0, 0.0],
            ProfileKind::Hyperbolic { kappa } => {
                let x = kappa * r;
                let sh = x.sinh();
                let half = (0.5 * x).sinh();
                [sh / kappa, x.cosh(), kappa * sh, 2.0 * half * half]
            }
            ProfileKind::Cone { a } => {
                let t = r.tanh();
                let sech2 = 1.0 - t * t;
                [a * r + (1.0 - a) * t, a + (1.0 - a) * sech2, -2.0 * (1.0 - a) * t * sech2, -(1.0 - a) * t * t]
            }
            ProfileKind::Perturbed { amplitude: am, width: s } => {
                let s2 = s * s;
                let e = (-(r * r) / s2).exp();
                let r2 = r * r;
                let bump1 = am * e * (3.0 * r2 - 2.0 * r2 * r2 / s2);
                let bump2 = am * e * (6.0 * r - 14.0 * r2 * r / s2 + 4.0 * r2 * r2 * r / (s2 * s2));
                [r + am * r2 * r * e, 1.0 + bump1, bump2, bump1]
            }
            ProfileKind::Tabulated(sp) => {
                let last = *sp.x().last().unwrap();
                if r > last {
                    // Beyond the samples continue with the tail shape.
                    let w0 = sp.eval(last)[0];
                    return match self.tail {
                        Tail::Power { p, .. } => {
                            let w = w0 * (r / last).powf(p);
                            let w1 = p * w / r;
                            [w, w1, p * (p - 1.0) * w / (r * r), w1 - 1.0]
                        }
                        Tail::Exponential { rate, .. } => {
                            let w = w0 * (rate * (r - last)).exp();
                            [w, rate * w, rate * rate * w, rate * w - 1.0]
                        }
                    };
                }
                let [v, d1, d2, _] = sp.eval(r);
                [v, d1, d2, d1 - 1.0]
            }
            ProfileKind::Scaled { factor, inner } => {
                let [w, d1, d2, dm] = inner.jet(r / factor);
                [factor * w, d1, d2 / factor, dm]
            }
        }
    }

    /// `w'''(0)`, which fixes both Ricci eigenvalues at the pole.
    pub fn third_at_pole(&self) -> Option<f64> {
        match &self.kind {
            ProfileKind::Euclidean => Some(0.0),
            ProfileKind::Hyperbolic { kappa } => Some(kappa * kappa),
            ProfileKind::Cone { a } => Some(-2.0 * (1.0 - a)),
            ProfileKind::Perturbed { amplitude, .. } => Some(6.0 * amplitude),
            ProfileKind::Tabulated(_) => None,
            ProfileKind::Scaled { factor, inner } => inner.third_at_pole().map(|t| t / (factor * factor)),
        }
    }

    /// Stable textual identity used for cache keys and report provenance.
    pub fn descriptor(&self) -> String {
        let tail = format!("{:?}", self.tail);
        match &self.kind {
            ProfileKind::Tabulated(sp) => {
                let mut h = Sha256::new();
                for (x, y) in sp.x().iter().zip(sp.y()) {
                    h.update(x.to_le_bytes());
                    h.update(y.to_le_bytes());
                }
                let d = h.finalize();
                let hex: String = d.iter().take(8).map(|b| format!("{b:02x}")).collect();
                format!("tabulated({hex});{tail}")
            }
            ProfileKind::Scaled { factor, inner } => format!("scaled({factor:?},{})", inner.descriptor()),
            k => format!("{k:?};{tail}"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd_check(p: &WarpingProfile, r: f64) {
        let h = 1e-4 * r.max(1e-2);
        let d1 = (p.w(r + h) - p.w(r - h)) / (2.0 * h);
        let d2 = (p.w(r + h) - 2.0 * p.w(r) + p.w(r - h)) / (h * h);
        let j = p.jet(r);
        assert!((d1 - j[1]).abs() < 1e-6 * (1.0 + j[1].abs()), "w' at {r}: {d1} vs {}", j[1]);
        assert!((d2 - j[2]).abs() < 1e-4 * (1.0 + j[2].abs()), "w'' at {r}: {d2} vs {}", j[2]);
        assert!((j[3] - (j[1] - 1.0)).abs() < 1e-12 * (1.0 + j[1].abs()));
    }

    #[test]
    fn analytic_derivatives_match_differences() {
        let profiles = [
            WarpingProfile::euclidean(),
            WarpingProfile::hyperbolic(1.0).unwrap(),
            WarpingProfile::cone(0.5).unwrap(),
            WarpingProfile::standard_perturbed(),
            WarpingProfile::standard_perturbed().scaled(2.0).unwrap(),
        ];
        for p in &profiles {
            for &r in &[0.05, 0.3, 1.0, 1.7, 3.0] {
                fd_check(p, r);
            }
        }
    }

    #[test]
    fn pole_conditions_hold_for_analytic_kinds() {
        for p in [
            WarpingProfile::cone(0.3).unwrap(),
            WarpingProfile::standard_perturbed(),
            WarpingProfile::hyperbolic(2.0).unwrap(),
        ] {
            let [w, d1, d2, _] = p.jet(0.0);
            assert_eq!(w, 0.0);
            assert!((d1 - 1.0).abs() < 1e-15);
            assert!(d2.abs() < 1e-15);
        }
    }

    #[test]
    fn spline_reproduces_cubic() {
        let x: Vec<f64> = (0..20).map(|k| k as f64 * 0.25).collect();
        let y: Vec<f64> = x.iter().map(|t| t + 0.1 * t * t * t).collect();
        let s = Spline::new(x, y).unwrap();
        let [v, d1, d2, _] = s.eval(1.3);
        assert!((v - (1.3 + 0.1 * 1.3f64.powi(3))).abs() < 1e-10);
        assert!((d1 - (1.0 + 0.3 * 1.69)).abs() < 1e-9);
        assert!((d2 - 0.6 * 1.3).abs() < 1e-8);
    }
}
