//! Closed-form radial functions used as weights `f` and data `h`.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RadialFn {
    #[default]
    Zero,
    Constant { value: f64 },
    /// `coef r^2`.
    Quadratic { coef: f64 },
    /// `amp (1 - e^{-(r/width)^2})`: a smooth bounded step.
    GaussianStep { amp: f64, width: f64 },
    /// `sum_k c_k r^k`.
    Polynomial { coeffs: Vec<f64> },
    /// `value` on `[0, radius]`, zero beyond.
    Indicator { value: f64, radius: f64 },
    /// `(1 + r^alpha)^{-1}`.
    Decay { alpha: f64 },
}

impl RadialFn {
    pub fn constant(value: f64) -> Self {
        RadialFn::Constant { value }
    }

    /// Value, first and second radial derivatives.
    pub fn jet(&self, r: f64) -> [f64; 3] {
        match self {
            RadialFn::Zero => [0.0; 3],
            RadialFn::Constant { value } => [*value, 0.0, 0.0],
            RadialFn::Quadratic { coef } => [coef * r * r, 2.0 * coef * r, 2.0 * coef],
            RadialFn::GaussianStep { amp, width } => {
                let s2 = width * width;
                let e = (-(r * r) / s2).exp();
                [amp * (1.0 - e), amp * 2.0 * r / s2 * e, amp * (2.0 / s2 - 4.0 * r * r / (s2 * s2)) * e]
            }
            RadialFn::Polynomial { coeffs } => {
                let mut out = [0.0; 3];
                for &c in coeffs.iter().rev() {
                    out[2] = out[2] * r + 2.0 * out[1];
                    out[1] = out[1] * r + out[0];
                    out[0] = out[0] * r + c;
                }
                out
            }
            RadialFn::Indicator { value, radius } => [if r <= *radius { *value } else { 0.0 }, 0.0, 0.0],
            RadialFn::Decay { alpha } => {
                if r == 0.0 {
                    let d1 = if *alpha == 1.0 { -1.0 } else { 0.0 };
                    let d2 = if *alpha == 2.0 { -2.0 } else if *alpha < 2.0 { f64::NEG_INFINITY } else { 0.0 };
                    return [1.0, d1, d2];
                }
                let ra = r.powf(*alpha);
                let d = 1.0 + ra;
                let dra = alpha * ra / r;
                let d2ra = alpha * (alpha - 1.0) * ra / (r * r);
                [1.0 / d, -dra / (d * d), 2.0 * dra * dra / (d * d * d) - d2ra / (d * d)]
            }
        }
    }

    pub fn eval(&self, r: f64) -> f64 {
        self.jet(r)[0]
    }

    /// Radii where the function is not smooth.
    pub fn breaks(&self) -> Vec<f64> {
        match self {
            RadialFn::Indicator { radius, .. } => vec![*radius],
            _ => vec![],
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            RadialFn::Zero => true,
            RadialFn::Constant { value } => *value == 0.0,
            RadialFn::Quadratic { coef } => *coef == 0.0,
            RadialFn::GaussianStep { amp, .. } => *amp == 0.0,
            RadialFn::Polynomial { coeffs } => coeffs.iter().all(|&c| c == 0.0),
            RadialFn::Indicator { value, .. } => *value == 0.0,
            RadialFn::Decay { .. } => false,
        }
    }

    /// `(sup f - inf f) / 2` over `[0, inf)`.
    pub fn half_oscillation(&self) -> f64 {
        match self {
            RadialFn::Zero | RadialFn::Constant { .. } => 0.0,
            RadialFn::Quadratic { coef } => {
                if *coef == 0.0 {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            RadialFn::GaussianStep { amp, .. } => amp.abs() / 2.0,
            RadialFn::Polynomial { coeffs } => {
                if coeffs.iter().skip(1).all(|&c| c == 0.0) {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            RadialFn::Indicator { value, .. } => value.abs() / 2.0,
            RadialFn::Decay { .. } => 0.5,
        }
    }

    /// `lim_{r -> inf} f(r)` when it exists.
    pub fn limit_at_infinity(&self) -> Option<f64> {
        match self {
            RadialFn::Zero | RadialFn::Indicator { .. } | RadialFn::Decay { .. } => Some(0.0),
            RadialFn::Constant { value } => Some(*value),
            RadialFn::GaussianStep { amp, .. } => Some(*amp),
            RadialFn::Quadratic { coef } => (*coef == 0.0).then_some(0.0),
            RadialFn::Polynomial { coeffs } => {
                if coeffs.iter().skip(1).all(|&c| c == 0.0) {
                    Some(coeffs.first().copied().unwrap_or(0.0))
                } else {
                    None
                }
            }
        }
    }

    /// `sup` and `inf` over `[0, radius]`.
    pub fn range_on(&self, radius: f64) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for k in 0..=2048 {
            let v = self.eval(radius * k as f64 / 2048.0);
            lo = lo.min(v);
            hi = hi.max(v);
        }
        (hi, lo)
    }

    pub fn descriptor(&self) -> String {
        format!("{self:?}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derivatives_match_differences() {
        let fs = [
            RadialFn::Quadratic { coef: 0.3 },
            RadialFn::GaussianStep { amp: 0.2, width: 1.5 },
            RadialFn::Polynomial { coeffs: vec![1.0, -2.0, 0.5, 0.25] },
            RadialFn::Decay { alpha: 10.0 },
        ];
        for f in &fs {
            for &r in &[0.2, 0.9, 1.7] {
                let h = 1e-5;
                let [_, d1, d2] = f.jet(r);
                let fd1 = (f.eval(r + h) - f.eval(r - h)) / (2.0 * h);
                let fd2 = (f.eval(r + h) - 2.0 * f.eval(r) + f.eval(r - h)) / (h * h);
                assert!((fd1 - d1).abs() < 1e-7 * (1.0 + d1.abs()), "{f:?} {r}");
                assert!((fd2 - d2).abs() < 1e-3 * (1.0 + d2.abs()), "{f:?} {r}");
            }
        }
    }

    #[test]
    fn oscillation_and_limits() {
        assert_eq!(RadialFn::constant(3.0).half_oscillation(), 0.0);
        assert_eq!(RadialFn::GaussianStep { amp: 0.1, width: 1.0 }.half_oscillation(), 0.05);
        assert!(RadialFn::Quadratic { coef: 1.0 }.limit_at_infinity().is_none());
    }
}
