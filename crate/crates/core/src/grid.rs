//! Log-uniform radial grids and sampled radial fields.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// Grid policy of a model manifold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub r_min: f64,
    pub r_max: f64,
    pub points: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec { r_min: 1e-6, r_max: 1e4, points: 4096 }
    }
}

impl GridSpec {
    pub fn with_points(self, points: usize) -> Self {
        GridSpec { points, ..self }
    }
}

/// Nodes `r_i = r_min * (r_max / r_min)^{i/(N-1)}`; uniform in `s = ln r`.
#[derive(Debug, Clone, PartialEq)]
pub struct LogGrid {
    spec: GridSpec,
    s0: f64,
    h: f64,
    r: Vec<f64>,
}

impl LogGrid {
    pub fn new(spec: GridSpec) -> Result<Self> {
        if !(spec.r_min > 0.0) || !(spec.r_max > spec.r_min) || spec.points < 8 {
            return Err(Error::BadParameters(format!("invalid grid {spec:?}")));
        }
        if spec.r_max < 1e2 {
            return Err(Error::BadParameters(format!("grid must reach r >= 100, got {}", spec.r_max)));
        }
        let s0 = spec.r_min.ln();
        let h = (spec.r_max.ln() - s0) / (spec.points - 1) as f64;
        let mut r: Vec<f64> = (0..spec.points).map(|i| (s0 + h * i as f64).exp()).collect();
        r[0] = spec.r_min;
        r[spec.points - 1] = spec.r_max;
        Ok(LogGrid { spec, s0, h, r })
    }

    pub fn spec(&self) -> GridSpec {
        self.spec
    }
    pub fn len(&self) -> usize {
        self.r.len()
    }
    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }
    pub fn nodes(&self) -> &[f64] {
        &self.r
    }
    pub fn r(&self, i: usize) -> f64 {
        self.r[i]
    }
    /// Spacing in `ln r`.
    pub fn h(&self) -> f64 {
        self.h
    }
    pub fn r_min(&self) -> f64 {
        self.spec.r_min
    }
    pub fn r_max(&self) -> f64 {
        self.spec.r_max
    }

    /// Index `i` of the cell `[r_i, r_{i+1}]` containing `r`, clamped to the grid.
    pub fn cell(&self, r: f64) -> usize {
        if r <= self.r[0] {
            return 0;
        }
        let x = (r.ln() - self.s0) / self.h;
        let mut i = (x.floor() as usize).min(self.len() - 2);
        while i > 0 && self.r[i] > r {
            i -= 1;
        }
        while i + 2 < self.len() && self.r[i + 1] <= r {
            i += 1;
        }
        i
    }

    /// Indices `b` such that some point of `breaks` lies in `[r_b, r_{b+1}]`.
    pub fn barrier_cells(&self, breaks: &[f64]) -> Vec<usize> {
        let mut out: Vec<usize> = breaks
            .iter()
            .filter(|&&x| x > self.r[0] && x < self.r_max())
            .flat_map(|&x| {
                let i = self.cell(x);
                // A break sitting on a node blocks both adjacent cells.
                let mut v = vec![i];
                if (x - self.r[i]).abs() <= 1e-12 * x && i > 0 {
                    v.push(i - 1);
                }
                if (x - self.r[i + 1]).abs() <= 1e-12 * x {
                    v.push(i + 1);
                }
                v
            })
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }
}

/// A radial scalar sampled on a [`LogGrid`], with an optional pole value and
/// optional exact radial derivatives (enabling cubic Hermite interpolation).
#[derive(Debug, Clone)]
pub struct RadialField {
    grid: Arc<LogGrid>,
    values: Vec<f64>,
    slopes: Option<Vec<f64>>,
    pole: Option<f64>,
}

impl RadialField {
    pub fn new(grid: Arc<LogGrid>, values: Vec<f64>, slopes: Option<Vec<f64>>, pole: Option<f64>) -> Self {
        assert_eq!(values.len(), grid.len());
        if let Some(s) = &slopes {
            assert_eq!(s.len(), grid.len());
        }
        RadialField { grid, values, slopes, pole }
    }

    pub fn from_fn(grid: Arc<LogGrid>, f: impl Fn(f64) -> f64, pole: Option<f64>) -> Self {
        let values = grid.nodes().iter().map(|&r| f(r)).collect();
        RadialField { grid, values, slopes: None, pole }
    }

    pub fn grid(&self) -> &LogGrid {
        &self.grid
    }
    pub fn grid_arc(&self) -> Arc<LogGrid> {
        Arc::clone(&self.grid)
    }
    pub fn values(&self) -> &[f64] {
        &self.values
    }
    pub fn slopes(&self) -> Option<&[f64]> {
        self.slopes.as_deref()
    }
    pub fn pole(&self) -> Option<f64> {
        self.pole
    }
    pub fn value(&self, i: usize) -> f64 {
        self.values[i]
    }

    pub fn sup(&self) -> f64 {
        let m = self.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        self.pole.map_or(m, |p| m.max(p))
    }
    pub fn inf(&self) -> f64 {
        let m = self.values.iter().cloned().fold(f64::INFINITY, f64::min);
        self.pole.map_or(m, |p| m.min(p))
    }

    /// Interpolated value at `r`. Below the first node the field is joined to
    /// its pole value by an even quadratic; beyond the last node it is held.
    pub fn eval(&self, r: f64) -> f64 {
        let g = &*self.grid;
        let r0 = g.r(0);
        if r <= r0 {
            return match self.pole {
                Some(p) => p + (self.values[0] - p) * (r / r0).powi(2),
                None => self.values[0],
            };
        }
        if r >= g.r_max() {
            return *self.values.last().unwrap();
        }
        let i = g.cell(r);
        let (a, b) = (g.r(i), g.r(i + 1));
        let h = g.h();
        let t = (r.ln() - a.ln()) / h;
        match &self.slopes {
            Some(sl) => {
                // Hermite in s = ln r; d/ds = r d/dr.
                let (y0, y1) = (self.values[i], self.values[i + 1]);
                let (m0, m1) = (sl[i] * a * h, sl[i + 1] * b * h);
                let t2 = t * t;
                let t3 = t2 * t;
                (2.0 * t3 - 3.0 * t2 + 1.0) * y0
                    + (t3 - 2.0 * t2 + t) * m0
                    + (-2.0 * t3 + 3.0 * t2) * y1
                    + (t3 - t2) * m1
            }
            None => {
                // Four-point Lagrange in s.
                let n = g.len();
                let lo = if i == 0 { 0 } else if i + 2 >= n { n - 4 } else { i - 1 };
                let x = i as f64 + t;
                let mut acc = 0.0;
                for j in lo..lo + 4 {
                    let mut l = 1.0;
                    for k in lo..lo + 4 {
                        if k != j {
                            l *= (x - k as f64) / (j as f64 - k as f64);
                        }
                    }
                    acc += l * self.values[j];
                }
                acc
            }
        }
    }

    /// Radial derivative at node `i` by finite differences in `ln r`,
    /// never crossing the given barrier cells.
    pub fn derivative_at(&self, i: usize, barriers: &[usize]) -> f64 {
        crate::quad::stencil_derivative(&self.values, self.grid.h(), i, barriers) / self.grid.r(i)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_endpoints_and_cells() {
        let g = LogGrid::new(GridSpec::default()).unwrap();
        assert_eq!(g.len(), 4096);
        assert_eq!(g.r(0), 1e-6);
        assert_eq!(g.r(4095), 1e4);
        for &r in &[1e-6, 3e-5, 0.5, 1.0, 7.0, 9999.0] {
            let i = g.cell(r);
            assert!(g.r(i) <= r && r <= g.r(i + 1), "r = {r}");
        }
    }

    #[test]
    fn hermite_interpolation_is_accurate() {
        let g = Arc::new(LogGrid::new(GridSpec::default()).unwrap());
        let vals = g.nodes().iter().map(|r| (-r).exp()).collect();
        let sl = g.nodes().iter().map(|r| -(-r).exp()).collect();
        let f = RadialField::new(g, vals, Some(sl), Some(1.0));
        for &r in &[1e-3, 0.37, 2.2, 5.5] {
            assert!((f.eval(r) - (-r).exp()).abs() < 1e-10);
        }
    }
}
