//! Scenario files: `[manifold]`, `[tail]`, `[scenario]` and an optional
//! `[calibration]` section of `key = value` lines.

use serde::Deserialize;
use std::path::{Path, PathBuf};
use warpbench_core::ledger::Calibration;
use warpbench_core::{build_manifold, Error, GridSpec, ModelManifold, RadialFn, Result, Tail, WarpingProfile};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    ReportCurvature,
    ReportKato,
    VerifyIsoperimetric,
    VerifyAbp,
    VerifyGreenBounds,
    VerifyOffcenter,
    Sweep,
}

impl Command {
    pub fn as_str(self) -> &'static str {
        match self {
            Command::ReportCurvature => "report-curvature",
            Command::ReportKato => "report-kato",
            Command::VerifyIsoperimetric => "verify-isoperimetric",
            Command::VerifyAbp => "verify-abp",
            Command::VerifyGreenBounds => "verify-green-bounds",
            Command::VerifyOffcenter => "verify-offcenter",
            Command::Sweep => "sweep",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProfileName {
    Euclidean,
    Hyperbolic,
    Cone,
    Perturbed,
    Tabulated,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifoldConfig {
    pub n: usize,
    pub profile: ProfileName,
    pub kappa: Option<f64>,
    /// Cone slope.
    pub a: Option<f64>,
    pub amplitude: Option<f64>,
    pub width: Option<f64>,
    /// Metric scaling `s w(r/s)`.
    pub scale: Option<f64>,
    pub r: Option<Vec<f64>>,
    pub w: Option<Vec<f64>>,
    pub grid_points: Option<usize>,
    pub r_max: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TailKind {
    Power,
    Exponential,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TailConfig {
    pub kind: TailKind,
    pub p: Option<f64>,
    pub rate: Option<f64>,
    pub c: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepKind {
    Radius,
    KTilde,
    B0Tilde,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: Option<String>,
    pub command: Option<Command>,
    pub radii: Option<Vec<f64>>,
    pub centers: Option<Vec<f64>>,
    pub tol: Option<f64>,
    /// Weight `f` of the measure `e^{-f} dvol`.
    pub weight: Option<RadialFn>,
    /// Test function `h`.
    pub data: Option<RadialFn>,
    pub mesh: Option<[usize; 2]>,
    pub start_radii: Option<usize>,
    pub steps: Option<usize>,
    pub stride: Option<usize>,
    pub sweep: Option<SweepKind>,
    pub target: Option<Command>,
    pub alpha: Option<f64>,
    pub v0: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub manifold: ManifoldConfig,
    pub tail: Option<TailConfig>,
    #[serde(default)]
    pub scenario: ScenarioConfig,
    #[serde(default)]
    pub calibration: Calibration,
}

fn cfg_err(msg: impl Into<String>) -> Error {
    Error::ConfigError(msg.into())
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| cfg_err(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| cfg_err(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }
}

fn need(v: Option<f64>, what: &str) -> Result<f64> {
    v.ok_or_else(|| cfg_err(format!("[manifold] needs `{what}`")))
}

impl ManifoldConfig {
    pub fn profile(&self, tail: Option<&TailConfig>) -> Result<WarpingProfile> {
        let tail = tail.map(TailConfig::to_tail).transpose()?;
        let p = match self.profile {
            ProfileName::Euclidean => WarpingProfile::euclidean(),
            ProfileName::Hyperbolic => WarpingProfile::hyperbolic(self.kappa.unwrap_or(1.0))?,
            ProfileName::Cone => WarpingProfile::cone(need(self.a, "a")?)?,
            ProfileName::Perturbed => match (self.amplitude, self.width) {
                (None, None) => WarpingProfile::standard_perturbed(),
                (a, w) => WarpingProfile::perturbed(a.unwrap_or(0.1), w.unwrap_or(1.0))?,
            },
            ProfileName::Tabulated => {
                let (Some(r), Some(w)) = (&self.r, &self.w) else {
                    return Err(cfg_err("tabulated profile needs `r` and `w`"));
                };
                let tail = tail.ok_or_else(|| cfg_err("tabulated profile needs a [tail] section"))?;
                WarpingProfile::tabulated(r.clone(), w.clone(), tail)?
            }
        };
        let p = match (self.profile, tail) {
            (ProfileName::Tabulated, _) | (_, None) => p,
            (_, Some(t)) => p.with_tail(t),
        };
        match self.scale {
            Some(s) => p.scaled(s),
            None => Ok(p),
        }
    }

    pub fn build(&self, tail: Option<&TailConfig>) -> Result<ModelManifold> {
        let p = self.profile(tail)?;
        let mut g = GridSpec::for_profile(&p);
        if let Some(k) = self.grid_points {
            g = g.with_points(k);
        }
        if let Some(r) = self.r_max {
            g.r_max = r;
        }
        build_manifold(self.n, p, g)
    }
}

impl TailConfig {
    pub fn to_tail(&self) -> Result<Tail> {
        match self.kind {
            TailKind::Power => Ok(Tail::Power { p: self.p.ok_or_else(|| cfg_err("power tail needs `p`"))?, c: self.c }),
            TailKind::Exponential => {
                Ok(Tail::Exponential { rate: self.rate.ok_or_else(|| cfg_err("exponential tail needs `rate`"))?, c: self.c })
            }
        }
    }
}

/// Overrides taken from the command line.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub tol: Option<f64>,
    pub calibration: Vec<(String, f64)>,
}

/// Parses `key=val`.
pub fn parse_assignment(s: &str) -> std::result::Result<(String, f64), String> {
    let (k, v) = s.split_once('=').ok_or_else(|| format!("expected key=val, got `{s}`"))?;
    let v: f64 = v.trim().parse().map_err(|e| format!("`{v}`: {e}"))?;
    Ok((k.trim().to_string(), v))
}

/// A validated scenario ready to run.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub command: Command,
    pub manifold: ManifoldConfig,
    pub tail: Option<TailConfig>,
    pub params: ScenarioConfig,
    pub calibration: Calibration,
    pub tol: f64,
    pub out_dir: PathBuf,
}

pub fn default_tol(c: Command) -> f64 {
    match c {
        Command::ReportKato | Command::VerifyAbp | Command::VerifyGreenBounds => 1e-6,
        _ => 1e-9,
    }
}

fn set_calibration(cal: &mut Calibration, key: &str, v: f64) -> Result<()> {
    let slot = match key {
        "c_harnack" => &mut cal.c_harnack,
        "c_meanvalue" => &mut cal.c_meanvalue,
        "c_litam" => &mut cal.c_litam,
        "c_green" => &mut cal.c_green,
        "c_oscillation" => &mut cal.c_oscillation,
        "c_ab" => &mut cal.c_ab,
        _ => return Err(cfg_err(format!("unknown calibration field `{key}`"))),
    };
    *slot = v;
    Ok(())
}

fn positive_list(v: &Option<Vec<f64>>, what: &str) -> Result<()> {
    if let Some(xs) = v {
        if xs.iter().any(|x| !(*x >= 0.0 && x.is_finite())) {
            return Err(cfg_err(format!("`{what}` entries must be finite and non-negative")));
        }
    }
    Ok(())
}

impl Scenario {
    pub fn new(cfg: ConfigFile, command: Command, ov: &Overrides, out_dir: PathBuf) -> Result<Self> {
        let p = cfg.scenario;
        if let Some(c) = p.command {
            if c != command {
                return Err(cfg_err(format!("config is for `{}`, not `{}`", c.as_str(), command.as_str())));
            }
        }
        let mut calibration = cfg.calibration;
        for (k, v) in &ov.calibration {
            set_calibration(&mut calibration, k, *v)?;
        }
        calibration.validate().map_err(|e| cfg_err(e.to_string()))?;
        let tol = ov.tol.or(p.tol).unwrap_or_else(|| default_tol(command));
        if !(tol > 0.0 && tol.is_finite()) {
            return Err(cfg_err(format!("tolerance must be positive, got {tol}")));
        }
        positive_list(&p.radii, "radii")?;
        positive_list(&p.centers, "centers")?;
        if command == Command::Sweep {
            match p.sweep {
                None => return Err(cfg_err("sweep needs `sweep = \"radius\" | \"k-tilde\" | \"b0-tilde\"`")),
                Some(SweepKind::Radius) => {
                    if p.radii.as_ref().is_none_or(|r| r.is_empty()) {
                        return Err(cfg_err("sweep grid is empty"));
                    }
                    match p.target.unwrap_or(Command::VerifyIsoperimetric) {
                        Command::VerifyIsoperimetric | Command::VerifyAbp => {}
                        t => return Err(cfg_err(format!("radius sweep cannot target `{}`", t.as_str()))),
                    }
                }
                Some(_) => {}
            }
        } else if p.radii.as_ref().is_some_and(|r| r.is_empty()) {
            return Err(cfg_err("`radii` is empty"));
        }
        if let Some(0) = p.stride {
            return Err(cfg_err("`stride` must be at least 1"));
        }
        let name = p.name.clone().unwrap_or_else(|| command.as_str().to_string());
        if name.is_empty() || name.contains(['/', '\\']) {
            return Err(cfg_err(format!("scenario name `{name}` is not a valid file stem")));
        }
        Ok(Scenario { name, command, manifold: cfg.manifold, tail: cfg.tail, params: p, calibration, tol, out_dir })
    }

    pub fn build_manifold(&self) -> Result<ModelManifold> {
        self.manifold.build(self.tail.as_ref())
    }
}
