//! Adaptive Gauss–Kronrod quadrature, sphere areas and finite-difference
//! stencils on uniform (log-radius) grids.

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Tolerances for [`adaptive`].
#[derive(Debug, Clone, Copy)]
pub struct Tol {
    pub rel: f64,
    pub abs: f64,
    pub max_depth: u32,
}

impl Default for Tol {
    fn default() -> Self {
        Tol { rel: 1e-11, abs: 1e-300, max_depth: 40 }
    }
}

impl Tol {
    pub fn rel(rel: f64) -> Self {
        Tol { rel, ..Tol::default() }
    }
}

/// One 15-point Kronrod panel with its embedded 7-point Gauss estimate.
#[inline]
pub fn gk15<F: Fn(f64) -> f64 + ?Sized>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    for i in 0..7 {
        let dx = h * XGK[i];
        let s = f(c - dx) + f(c + dx);
        k += WGK[i] * s;
        if i % 2 == 1 {
            g += WG[i / 2] * s;
        }
    }
    (k * h, g * h)
}

/// Adaptive bisection on Gauss–Kronrod panels.
pub fn adaptive<F: Fn(f64) -> f64 + ?Sized>(f: &F, a: f64, b: f64, tol: Tol) -> f64 {
    if a == b {
        return 0.0;
    }
    // The error target is relative to the whole integral, so panels where
    // the integrand is tiny and noisy do not force endless bisection.
    let (k, g) = gk15(f, a, b);
    let err = (k - g).abs();
    let abs = tol.abs.max(tol.rel * k.abs());
    if err <= abs || tol.max_depth == 0 || !err.is_finite() {
        return k;
    }
    let m = 0.5 * (a + b);
    recurse(f, a, m, tol.rel, 0.5 * abs, tol.max_depth - 1) + recurse(f, m, b, tol.rel, 0.5 * abs, tol.max_depth - 1)
}

fn recurse<F: Fn(f64) -> f64 + ?Sized>(f: &F, a: f64, b: f64, rel: f64, abs: f64, depth: u32) -> f64 {
    let (k, g) = gk15(f, a, b);
    let err = (k - g).abs();
    if err <= abs.max(rel * k.abs()).max(f64::MIN_POSITIVE) || depth == 0 || !err.is_finite() {
        return k;
    }
    let m = 0.5 * (a + b);
    recurse(f, a, m, rel, 0.5 * abs, depth - 1) + recurse(f, m, b, rel, 0.5 * abs, depth - 1)
}

/// Integral of `f` over `[a, b]` split at every interior breakpoint.
pub fn adaptive_split<F: Fn(f64) -> f64 + ?Sized>(f: &F, a: f64, b: f64, breaks: &[f64], tol: Tol) -> f64 {
    let mut lo = a;
    let mut total = 0.0;
    for &x in breaks {
        if x > lo && x < b {
            total += adaptive(f, lo, x, tol);
            lo = x;
        }
    }
    total + adaptive(f, lo, b, tol)
}

/// Area of the unit `k`-sphere in `R^{k+1}`.
pub fn sphere_area(k: usize) -> f64 {
    use std::f64::consts::PI;
    match k {
        0 => 2.0,
        1 => 2.0 * PI,
        _ => 2.0 * PI * sphere_area(k - 2) / (k as f64 - 1.0),
    }
}

/// Fornberg's finite-difference weights: `c[m][j]` is the weight of
/// `x[j]` in the `m`-th derivative at `z`, for `m <= order`.
pub fn fornberg(z: f64, x: &[f64], order: usize) -> Vec<Vec<f64>> {
    let n = x.len();
    let mut c = vec![vec![0.0; n]; order + 1];
    let mut c1 = 1.0;
    let mut c4 = x[0] - z;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(order);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = x[i] - z;
        for j in 0..i {
            let c3 = x[i] - x[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[k][i] = c1 * (k as f64 * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                }
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for k in (1..=mn).rev() {
                c[k][j] = (c4 * c[k][j] - k as f64 * c[k - 1][j]) / c3;
            }
            c[0][j] = c4 * c[0][j] / c3;
        }
        c1 = c2;
    }
    c
}

/// First derivative at node `i` of samples on a uniform grid of spacing `h`.
///
/// `barriers` holds sorted indices `b` meaning the sampled function is not
/// smooth somewhere in `[x_b, x_{b+1}]`; stencils never straddle a barrier
/// so accuracy is kept on both sides of a kink. The widest admissible
/// stencil (up to five points) closest to centred is used.
pub fn stencil_derivative(values: &[f64], h: f64, i: usize, barriers: &[usize]) -> f64 {
    let n = values.len();
    for width in (2..=5usize).rev() {
        if width > n {
            continue;
        }
        let mut best: Option<usize> = None;
        let lo_min = i.saturating_sub(width - 1);
        let lo_max = i.min(n - width);
        for lo in lo_min..=lo_max {
            let hi = lo + width - 1;
            let blocked = barriers.iter().any(|&b| lo <= b && b < hi);
            if blocked {
                continue;
            }
            let off = (2 * i) as i64 - (lo + hi) as i64;
            best = match best {
                None => Some(lo),
                Some(prev) => {
                    let poff = (2 * i) as i64 - (prev + prev + width - 1) as i64;
                    if off.abs() < poff.abs() {
                        Some(lo)
                    } else {
                        Some(prev)
                    }
                }
            };
        }
        if let Some(lo) = best {
            let xs: Vec<f64> = (0..width).map(|k| (lo + k) as f64 - i as f64).collect();
            let w = fornberg(0.0, &xs, 1);
            let mut d = 0.0;
            for k in 0..width {
                d += w[1][k] * values[lo + k];
            }
            return d / h;
        }
    }
    f64::NAN
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn gk_integrates_polynomials_exactly() {
        let f = |x: f64| 3.0 * x * x - 2.0 * x + 1.0;
        let v = adaptive(&f, 0.0, 2.0, Tol::default());
        assert!((v - 6.0).abs() < 1e-14);
    }

    #[test]
    fn adaptive_handles_kinks() {
        let f = |x: f64| (x - 0.3).abs();
        let v = adaptive(&f, 0.0, 1.0, Tol::rel(1e-12));
        let exact = 0.5 * (0.09 + 0.49);
        assert!((v - exact).abs() < 1e-11, "{v}");
    }

    #[test]
    fn sphere_areas() {
        assert!((sphere_area(2) - 4.0 * PI).abs() < 1e-14);
        assert!((sphere_area(3) - 2.0 * PI * PI).abs() < 1e-13);
        assert!((sphere_area(4) - 8.0 * PI * PI / 3.0).abs() < 1e-12);
    }

    #[test]
    fn fornberg_centered_first_derivative() {
        let w = fornberg(0.0, &[-2.0, -1.0, 0.0, 1.0, 2.0], 1);
        let expect = [1.0 / 12.0, -2.0 / 3.0, 0.0, 2.0 / 3.0, -1.0 / 12.0];
        for k in 0..5 {
            assert!((w[1][k] - expect[k]).abs() < 1e-14);
        }
    }

    #[test]
    fn stencil_avoids_barrier() {
        // |x - 0.55| sampled at 0.0, 0.1, ..., 1.0; kink between nodes 5 and 6.
        let xs: Vec<f64> = (0..11).map(|k| k as f64 * 0.1).collect();
        let v: Vec<f64> = xs.iter().map(|x| (x - 0.55f64).abs()).collect();
        let d5 = stencil_derivative(&v, 0.1, 5, &[5]);
        let d6 = stencil_derivative(&v, 0.1, 6, &[5]);
        assert!((d5 + 1.0).abs() < 1e-12);
        assert!((d6 - 1.0).abs() < 1e-12);
    }
}
