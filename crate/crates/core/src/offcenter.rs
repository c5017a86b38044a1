//! Geometry of balls centred away from the pole.
//!
//! Distances from a point at radius `r0` are computed on the meridian
//! half-plane `(r, ψ) ∈ [r_lo, r_hi] × [0, ψ_hi]` with metric
//! `dr^2 + w(r)^2 dψ^2`, by first-order fast marching.

use crate::error::{Error, Result};
use crate::geometry::ModelManifold;
use crate::quad::sphere_area;
use ordered_float::NotNan;
use rayon::prelude::*;
use sha2::{Digest, Sha256};
use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::f64::consts::PI;
use std::path::{Path, PathBuf};

pub const MIN_NR: usize = 256;
pub const MIN_NPSI: usize = 128;

/// Node counts and extent of the `(r, ψ)` mesh.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeshSpec {
    pub nr: usize,
    pub npsi: usize,
    pub r_lo: f64,
    pub r_hi: f64,
    pub psi_hi: f64,
}

impl MeshSpec {
    /// `[0, r_hi] × [0, π]`.
    pub fn full(nr: usize, npsi: usize, r_hi: f64) -> Self {
        MeshSpec { nr, npsi, r_lo: 0.0, r_hi, psi_hi: PI }
    }

    /// Smallest mesh that contains every minimizing path from `(r0, 0)` to
    /// points of `B_R`: such paths stay in the ball, so `|r - r0| < R` and
    /// `ψ < R / min w` on that band.
    pub fn for_ball(m: &ModelManifold, r0: f64, radius: f64, nr: usize, npsi: usize) -> Self {
        let pad = 1.02;
        let r_hi = r0 + pad * radius;
        if r0 <= pad * radius {
            return MeshSpec::full(nr, npsi, r_hi);
        }
        let r_lo = r0 - pad * radius;
        let w_min = (0..=64).map(|k| m.w(r_lo + (r_hi - r_lo) * k as f64 / 64.0)).fold(f64::INFINITY, f64::min);
        let psi_hi = (pad * radius / w_min).min(PI);
        MeshSpec { nr, npsi, r_lo, r_hi, psi_hi }
    }

    pub fn validate(&self) -> Result<()> {
        if self.nr < MIN_NR || self.npsi < MIN_NPSI {
            return Err(Error::MeshTooCoarse { nr: self.nr, npsi: self.npsi });
        }
        if !(self.r_hi > self.r_lo && self.r_lo >= 0.0 && self.psi_hi > 0.0 && self.psi_hi <= PI) {
            return Err(Error::BadParameters(format!("invalid mesh extent {self:?}")));
        }
        Ok(())
    }

    pub fn hr(&self) -> f64 {
        (self.r_hi - self.r_lo) / (self.nr - 1) as f64
    }

    pub fn hpsi(&self) -> f64 {
        self.psi_hi / (self.npsi - 1) as f64
    }

    pub fn r(&self, i: usize) -> f64 {
        self.r_lo + i as f64 * self.hr()
    }

    pub fn psi(&self, j: usize) -> f64 {
        j as f64 * self.hpsi()
    }

    fn has_pole(&self) -> bool {
        self.r_lo == 0.0
    }
}

/// Distances from `(r0, 0)` on a mesh.
#[derive(Debug, Clone)]
pub struct DistanceField {
    pub source: f64,
    pub mesh: MeshSpec,
    /// Row-major, `d[i * npsi + j]`.
    pub d: Vec<f64>,
}

impl DistanceField {
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.d[i * self.mesh.npsi + j]
    }

    /// Bilinear interpolation; `None` outside the mesh.
    pub fn eval(&self, r: f64, psi: f64) -> Option<f64> {
        let ms = &self.mesh;
        let psi = psi.abs();
        if r < ms.r_lo || r > ms.r_hi || psi > ms.psi_hi {
            return None;
        }
        let x = (r - ms.r_lo) / ms.hr();
        let y = psi / ms.hpsi();
        let i = (x.floor() as usize).min(ms.nr - 2);
        let j = (y.floor() as usize).min(ms.npsi - 2);
        let (fx, fy) = (x - i as f64, y - j as f64);
        Some(
            (1.0 - fx) * (1.0 - fy) * self.at(i, j)
                + fx * (1.0 - fy) * self.at(i + 1, j)
                + (1.0 - fx) * fy * self.at(i, j + 1)
                + fx * fy * self.at(i + 1, j + 1),
        )
    }
}

struct Marcher<'a> {
    mesh: &'a MeshSpec,
    /// `w(r_i) hψ`.
    arc: Vec<f64>,
}

impl<'a> Marcher<'a> {
    fn new(m: &ModelManifold, mesh: &'a MeshSpec) -> Self {
        let hp = mesh.hpsi();
        let arc = (0..mesh.nr).map(|i| m.w(mesh.r(i)) * hp).collect();
        Marcher { mesh, arc }
    }

    /// Dijkstra-ordered upwind solve of `|∇T| = 1`, stopped once the front
    /// passes `stop`.
    fn run(&self, init: &[(usize, f64)], stop: f64) -> Vec<f64> {
        let (nr, np) = (self.mesh.nr, self.mesh.npsi);
        let hr = self.mesh.hr();
        let pole = self.mesh.has_pole();
        let mut t = vec![f64::INFINITY; nr * np];
        let mut done = vec![false; nr * np];
        let mut heap = BinaryHeap::new();
        let key = |v: f64| Reverse(NotNan::new(v).expect("finite arrival time"));
        for &(k, v) in init {
            if v < t[k] {
                t[k] = v;
                heap.push((key(v), k));
            }
        }
        let mut fresh = Vec::with_capacity(np);
        while let Some((Reverse(tk), k)) = heap.pop() {
            let tk = tk.into_inner();
            if done[k] || tk > t[k] {
                continue;
            }
            fresh.clear();
            if pole && k < np {
                // the pole row is a single point
                for j in 0..np {
                    if !done[j] {
                        t[j] = tk;
                        done[j] = true;
                        fresh.push(j);
                    }
                }
            } else {
                done[k] = true;
                fresh.push(k);
            }
            if tk > stop {
                break;
            }
            for &a in &fresh {
                let (i, j) = (a / np, a % np);
                let mut nbs = [usize::MAX; 4];
                if i > 0 {
                    nbs[0] = a - np;
                }
                if i + 1 < nr {
                    nbs[1] = a + np;
                }
                if j > 0 {
                    nbs[2] = a - 1;
                }
                if j + 1 < np {
                    nbs[3] = a + 1;
                }
                for &b in nbs.iter().filter(|&&b| b != usize::MAX) {
                    if done[b] {
                        continue;
                    }
                    let v = self.update(&t, &done, b, hr);
                    if v < t[b] {
                        t[b] = v;
                        heap.push((key(v), b));
                    }
                }
            }
        }
        t
    }

    fn update(&self, t: &[f64], done: &[bool], k: usize, hr: f64) -> f64 {
        let (nr, np) = (self.mesh.nr, self.mesh.npsi);
        let (i, j) = (k / np, k % np);
        let get = |b: usize| if done[b] { t[b] } else { f64::INFINITY };
        let mut tr = f64::INFINITY;
        if i > 0 {
            tr = tr.min(get(k - np));
        }
        if i + 1 < nr {
            tr = tr.min(get(k + np));
        }
        let a = self.arc[i];
        let mut tp = f64::INFINITY;
        if a > 0.0 {
            if j > 0 {
                tp = tp.min(get(k - 1));
            }
            if j + 1 < np {
                tp = tp.min(get(k + 1));
            }
        }
        let mut best = (tr + hr).min(tp + a);
        if tr.is_finite() && tp.is_finite() {
            let (ar, ap) = (1.0 / (hr * hr), 1.0 / (a * a));
            let qa = ar + ap;
            let qb = -2.0 * (tr * ar + tp * ap);
            let qc = tr * tr * ar + tp * tp * ap - 1.0;
            let disc = qb * qb - 4.0 * qa * qc;
            if disc >= 0.0 {
                let v = (-qb + disc.sqrt()) / (2.0 * qa);
                if v >= tr.max(tp) {
                    best = best.min(v);
                }
            }
        }
        best
    }

    /// Nodes within `rho` of `(r0, ψ0)` seeded with the midpoint-metric
    /// distance (the flat law of cosines next to the pole).
    fn seed(&self, m: &ModelManifold, r0: f64, psi0: f64, rho: f64) -> Vec<(usize, f64)> {
        let ms = self.mesh;
        let (hr, hp) = (ms.hr(), ms.hpsi());
        let np = ms.npsi;
        let near_pole = ms.has_pole() && r0 <= rho.max(3.0 * hr);
        let rho = rho.max(2.5 * hr);
        let i0 = ((r0 - rho - ms.r_lo) / hr).floor().max(0.0) as usize;
        let i1 = (((r0 + rho - ms.r_lo) / hr).ceil() as usize).min(ms.nr - 1);
        let mut out = Vec::new();
        for i in i0..=i1 {
            let r = ms.r(i);
            let (j0, j1) = if near_pole {
                (0, np - 1)
            } else {
                let wmin = m.w(r.min(r0)).max(1e-300);
                let span = (rho / wmin / hp).ceil() as usize + 2;
                let cj = (psi0 / hp).round() as usize;
                (cj.saturating_sub(span), (cj + span).min(np - 1))
            };
            for j in j0..=j1 {
                let dpsi = (ms.psi(j) - psi0).abs();
                let d = if near_pole {
                    (r * r + r0 * r0 - 2.0 * r * r0 * dpsi.cos()).max(0.0).sqrt()
                } else {
                    let wm = m.w(0.5 * (r + r0));
                    ((r - r0).powi(2) + (wm * dpsi).powi(2)).sqrt()
                };
                if d <= rho || (i as f64 - (r0 - ms.r_lo) / hr).abs() <= 1.0 && (dpsi / hp) <= 1.0 {
                    out.push((i * np + j, d));
                }
            }
        }
        out
    }
}

/// Radius of the seeded neighbourhood around a source at `r0`.
fn seed_radius(mesh: &MeshSpec, r0: f64) -> f64 {
    (0.1 * r0.min(1.0)).max(2.5 * mesh.hr())
}

/// Distances from the point `(r0, ψ = 0)`.
pub fn distance_field(m: &ModelManifold, r0: f64, mesh: MeshSpec) -> Result<DistanceField> {
    mesh.validate()?;
    if !(r0 >= 0.0 && r0 <= m.r_max() / 2.0) {
        return Err(Error::BadParameters(format!("source radius {r0} outside [0, R_max/2]")));
    }
    if r0 < mesh.r_lo || r0 > mesh.r_hi {
        return Err(Error::BadParameters(format!("source radius {r0} outside the mesh")));
    }
    let mr = Marcher::new(m, &mesh);
    let seed = mr.seed(m, r0, 0.0, seed_radius(&mesh, r0));
    let d = mr.run(&seed, f64::INFINITY);
    Ok(DistanceField { source: r0, mesh, d })
}

/// `Vol(B_R((r0, 0)))` from the indicator `d < R` against
/// `ω_{n-2} w^{n-1} sin^{n-2} ψ dr dψ`.
pub fn ball_volume_offcenter(m: &ModelManifold, field: &DistanceField, radius: f64) -> Result<f64> {
    let r0 = field.source;
    let ms = &field.mesh;
    if radius > m.r_max() / 2.0 - r0 || r0 + radius > ms.r_hi || (ms.r_lo > 0.0 && r0 - radius < ms.r_lo) {
        return Err(Error::BallExitsGrid(radius));
    }
    if ms.psi_hi < PI {
        // the whole top edge must lie outside the ball
        if (0..ms.nr).any(|i| field.at(i, ms.npsi - 1) < radius) {
            return Err(Error::BallExitsGrid(radius));
        }
    }
    let n = m.n();
    let om = sphere_area(n - 2);
    let (hr, hp) = (ms.hr(), ms.hpsi());
    const SUB: usize = 4;
    let rows: Vec<f64> = (0..ms.nr - 1)
        .into_par_iter()
        .map(|i| {
            let mut acc = 0.0;
            for j in 0..ms.npsi - 1 {
                let c = [field.at(i, j), field.at(i + 1, j), field.at(i, j + 1), field.at(i + 1, j + 1)];
                if c.iter().cloned().fold(f64::INFINITY, f64::min) >= radius {
                    continue;
                }
                for a in 0..SUB {
                    let fx = (a as f64 + 0.5) / SUB as f64;
                    let r = ms.r(i) + fx * hr;
                    let wr = m.wpow(r);
                    for b in 0..SUB {
                        let fy = (b as f64 + 0.5) / SUB as f64;
                        let d = (1.0 - fx) * (1.0 - fy) * c[0] + fx * (1.0 - fy) * c[1] + (1.0 - fx) * fy * c[2] + fx * fy * c[3];
                        if d < radius {
                            let psi = ms.psi(j) + fy * hp;
                            acc += wr * psi.sin().powi(n as i32 - 2);
                        }
                    }
                }
            }
            acc
        })
        .collect();
    Ok(om * rows.iter().sum::<f64>() * hr * hp / (SUB * SUB) as f64)
}

/// `Vol(B_R(y))` for `y` at radius `r0`, exact at the pole.
pub fn ball_volume(m: &ModelManifold, r0: f64, radius: f64, nr: usize, npsi: usize) -> Result<f64> {
    if r0 == 0.0 {
        return Ok(m.volume_and_area(radius)?.0);
    }
    if radius > m.r_max() / 2.0 - r0 {
        return Err(Error::BallExitsGrid(radius));
    }
    let mesh = MeshSpec::for_ball(m, r0, radius, nr, npsi);
    let f = distance_field(m, r0, mesh)?;
    ball_volume_offcenter(m, &f, radius)
}

#[derive(Debug, Clone)]
pub struct AhlforsReport {
    pub v0_emp: f64,
    pub v0_upper: f64,
    pub xi_emp: f64,
    /// `(center radius, ball radius, Vol / r^n)`.
    pub samples: Vec<(f64, f64, f64)>,
    /// `Vol(B_r(y))/r^n` or the (VC) ratio grows by more than
    /// [`GROWTH_LIMIT`] across the sampled radii.
    pub growth_flag: bool,
}

impl AhlforsReport {
    pub fn spread(&self) -> f64 {
        self.v0_upper / self.v0_emp
    }
    pub fn regular(&self) -> bool {
        !self.growth_flag && self.v0_emp > 0.0 && self.v0_upper.is_finite()
    }
}

pub const DEFAULT_CENTERS: [f64; 4] = [0.0, 1.0, 5.0, 20.0];
pub const DEFAULT_RADII: [f64; 6] = [0.5, 1.0, 2.0, 5.0, 10.0, 20.0];

/// Growth factor of `Vol(B_r(y))/r^n` across the sampled radii beyond which
/// the report is flagged.
pub const GROWTH_LIMIT: f64 = 8.0;

pub fn ahlfors_check(m: &ModelManifold, centers: &[f64], radii: &[f64], nr: usize, npsi: usize) -> Result<AhlforsReport> {
    let n = m.n() as i32;
    let pairs: Vec<(f64, f64)> = centers.iter().flat_map(|&c| radii.iter().map(move |&r| (c, r))).collect();
    let vols: Vec<Result<f64>> = pairs.par_iter().map(|&(c, r)| ball_volume(m, c, r, nr, npsi)).collect();
    let mut samples = Vec::with_capacity(pairs.len());
    for (&(c, r), v) in pairs.iter().zip(vols) {
        samples.push((c, r, v? / r.powi(n)));
    }
    let lo = samples.iter().map(|s| s.2).fold(f64::INFINITY, f64::min);
    let hi = samples.iter().map(|s| s.2).fold(f64::NEG_INFINITY, f64::max);
    let mut growth_flag = false;
    for &c in centers {
        let row: Vec<f64> = samples.iter().filter(|s| s.0 == c).map(|s| s.2).collect();
        if let (Some(first), Some(last)) = (row.first(), row.last()) {
            if last / first > GROWTH_LIMIT {
                growth_flag = true;
            }
        }
    }
    let vc = vc_check(m, radii, nr, npsi)?;
    Ok(AhlforsReport { v0_emp: lo, v0_upper: hi, xi_emp: vc.xi_emp, samples, growth_flag: growth_flag || vc.growing })
}

#[derive(Debug, Clone)]
pub struct VcReport {
    pub xi_emp: f64,
    /// `(r, Vol(B_r(o)) / Vol(B_{r/2}(x)))` with `x ∈ ∂B_r(o)`.
    pub samples: Vec<(f64, f64)>,
    /// The ratio grows by more than [`GROWTH_LIMIT`] across the radii.
    pub growing: bool,
}

/// One `x` per radius suffices by rotational symmetry.
pub fn vc_check(m: &ModelManifold, radii: &[f64], nr: usize, npsi: usize) -> Result<VcReport> {
    let vals: Vec<Result<(f64, f64)>> = radii
        .par_iter()
        .map(|&r| {
            let inner = m.volume_and_area(r)?.0;
            let off = ball_volume(m, r, r / 2.0, nr, npsi)?;
            Ok((r, inner / off))
        })
        .collect();
    let samples = vals.into_iter().collect::<Result<Vec<_>>>()?;
    let xi_emp = samples.iter().map(|s| s.1).fold(f64::NEG_INFINITY, f64::max);
    let growing = match (samples.first(), samples.last()) {
        (Some(a), Some(b)) => b.1 / a.1 > GROWTH_LIMIT,
        _ => false,
    };
    Ok(VcReport { xi_emp, samples, growing })
}

/// Greedy maximal `αR`-separated set of mesh nodes in the annulus
/// `R <= r < QR` of the meridian half-plane; the balls of radius `αR`
/// about it cover the annulus.
pub fn covering_count_empirical(m: &ModelManifold, radius: f64, q: f64, alpha: f64, nr: usize, npsi: usize) -> Result<usize> {
    if !(q > 1.0 && alpha > 0.0 && alpha <= (q - 1.0) / 4.0 * (1.0 + 1e-12)) {
        return Err(Error::BadParameters(format!("need 0 < alpha <= (Q-1)/4, got alpha={alpha}, Q={q}")));
    }
    let mesh = MeshSpec::full(nr, npsi, q * radius + 1.05 * alpha * radius);
    mesh.validate()?;
    if mesh.r_hi > m.r_max() {
        return Err(Error::BallExitsGrid(mesh.r_hi));
    }
    let mr = Marcher::new(m, &mesh);
    let np = mesh.npsi;
    let sep = alpha * radius;
    let mut covered = vec![false; mesh.nr * np];
    let mut count = 0;
    for i in 0..mesh.nr {
        let r = mesh.r(i);
        if r < radius || r >= q * radius {
            continue;
        }
        for j in 0..np {
            let k = i * np + j;
            if covered[k] {
                continue;
            }
            count += 1;
            let seed = mr.seed(m, r, mesh.psi(j), 2.5 * mesh.hr());
            let t = mr.run(&seed, sep);
            for (c, &v) in covered.iter_mut().zip(&t) {
                if v < sep {
                    *c = true;
                }
            }
            covered[k] = true;
        }
    }
    Ok(count)
}

/// On-disk cache of distance fields keyed by profile, source and mesh.
#[derive(Debug, Clone)]
pub struct DistanceCache {
    dir: PathBuf,
}

const MAGIC: &[u8; 4] = b"WBDF";
const VERSION: u32 = 1;

impl DistanceCache {
    pub fn new(dir: impl AsRef<Path>) -> Result<Self> {
        std::fs::create_dir_all(dir.as_ref()).map_err(|e| Error::ConfigError(format!("cache dir: {e}")))?;
        Ok(DistanceCache { dir: dir.as_ref().to_path_buf() })
    }

    fn key(m: &ModelManifold, r0: f64, mesh: &MeshSpec) -> [u8; 32] {
        let s = format!(
            "{}|{:e}|{}|{}|{:e}|{:e}|{:e}",
            m.profile().descriptor(),
            r0,
            mesh.nr,
            mesh.npsi,
            mesh.r_lo,
            mesh.r_hi,
            mesh.psi_hi
        );
        Sha256::digest(s.as_bytes()).into()
    }

    fn path(&self, key: &[u8; 32]) -> PathBuf {
        let hex: String = key.iter().map(|b| format!("{b:02x}")).collect();
        self.dir.join(format!("{hex}.wbdf"))
    }

    fn load(path: &Path, key: &[u8; 32], mesh: &MeshSpec) -> Option<Vec<f64>> {
        let bytes = std::fs::read(path).ok()?;
        let head = 4 + 4 + 8 + 8 + 32;
        let len = mesh.nr * mesh.npsi;
        if bytes.len() != head + 8 * len || &bytes[..4] != MAGIC {
            return None;
        }
        let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
        let u64_at = |o: usize| u64::from_le_bytes(bytes[o..o + 8].try_into().unwrap()) as usize;
        if u32_at(4) != VERSION || u64_at(8) != mesh.nr || u64_at(16) != mesh.npsi || &bytes[24..56] != key {
            return None;
        }
        Some(bytes[head..].chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect())
    }

    fn store(path: &Path, key: &[u8; 32], field: &DistanceField) -> std::io::Result<()> {
        let mut buf = Vec::with_capacity(56 + 8 * field.d.len());
        buf.extend_from_slice(MAGIC);
        buf.extend_from_slice(&VERSION.to_le_bytes());
        buf.extend_from_slice(&(field.mesh.nr as u64).to_le_bytes());
        buf.extend_from_slice(&(field.mesh.npsi as u64).to_le_bytes());
        buf.extend_from_slice(key);
        for v in &field.d {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        let tmp = path.with_extension("tmp");
        std::fs::write(&tmp, buf)?;
        std::fs::rename(tmp, path)
    }

    pub fn get_or_compute(&self, m: &ModelManifold, r0: f64, mesh: MeshSpec) -> Result<DistanceField> {
        let key = Self::key(m, r0, &mesh);
        let path = self.path(&key);
        if let Some(d) = Self::load(&path, &key, &mesh) {
            return Ok(DistanceField { source: r0, mesh, d });
        }
        let field = distance_field(m, r0, mesh)?;
        Self::store(&path, &key, &field).map_err(|e| Error::ConfigError(format!("cache write: {e}")))?;
        Ok(field)
    }
}
