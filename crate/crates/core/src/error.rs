use thiserror::Error;

/// Every failure mode of the workbench.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension {0} is below 3")]
    DimensionTooLow(usize),
    #[error("pole condition violated: {0}")]
    PoleConditionViolated(String),
    #[error("warping function is not positive at r = {0}")]
    NonPositiveWarp(f64),
    #[error("evaluation at the pole needs a series expansion the profile does not provide")]
    PoleEvaluation,
    #[error("radius {r} outside the grid [0, {r_max}]")]
    OutOfGrid { r: f64, r_max: f64 },
    #[error("tail metadata does not match the profile: {0}")]
    TailUnresolved(String),
    #[error("curvature envelope has infinite b0")]
    EnvelopeDivergent,
    #[error("curvature decay fit failed: {0}")]
    FitFailed(String),
    #[error("manifold is parabolic (no positive Green kernel)")]
    Parabolic,
    #[error("potential diverges: {0}")]
    Divergent(String),
    #[error("not gaugeable: (n-2) k = {0} >= 1")]
    NotGaugeable(f64),
    #[error("no convergence after {iterations} iterations (last change {change:e})")]
    NoConvergence { iterations: usize, change: f64 },
    #[error("test function is degenerate: both sides of the scaling identity vanish")]
    DegenerateH,
    #[error("problem is not normalized (relative mismatch {0:e})")]
    NotNormalized(f64),
    #[error("start radius {0} is outside the set where |grad u| < 1")]
    OutsideU(f64),
    #[error("conjugate point at t = {0}")]
    ConjugatePoint(f64),
    #[error("horizon {r} must exceed the domain diameter {diam}")]
    HorizonTooSmall { r: f64, diam: f64 },
    #[error("curvature hypothesis fails: min eigenvalue {0:e}")]
    CurvatureHypothesisFails(f64),
    #[error("asymptotic volume ratio undefined: {0}")]
    AVRUndefined(String),
    #[error("mesh {nr}x{npsi} is below the minimum 256x128")]
    MeshTooCoarse { nr: usize, npsi: usize },
    #[error("ball of radius {0} leaves the mesh")]
    BallExitsGrid(f64),
    #[error("bad parameters: {0}")]
    BadParameters(String),
    #[error("K must be positive")]
    KZero,
    #[error("radius {0} exceeds 1")]
    RadiusTooLarge(f64),
    #[error("alpha = {alpha} must exceed 3n = {min}")]
    AlphaTooSmall { alpha: f64, min: f64 },
    #[error("bound {name} = {bound:e} below exact value {exact:e}")]
    DominanceFailure { name: String, bound: f64, exact: f64 },
    #[error("config error: {0}")]
    ConfigError(String),
}

/// Coarse classification used by the command-line exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    /// A hypothesis of the construction is not met on the given input.
    Hypothesis,
    /// An inequality or numerical self-check failed.
    Assertion,
    /// The input itself is malformed.
    Config,
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        use Error::*;
        match self {
            DimensionTooLow(_)
            | PoleConditionViolated(_)
            | NonPositiveWarp(_)
            | OutOfGrid { .. }
            | MeshTooCoarse { .. }
            | BadParameters(_)
            | ConfigError(_) => ErrorClass::Config,
            Parabolic
            | Divergent(_)
            | NotGaugeable(_)
            | EnvelopeDivergent
            | CurvatureHypothesisFails(_)
            | AVRUndefined(_)
            | KZero
            | RadiusTooLarge(_)
            | AlphaTooSmall { .. }
            | HorizonTooSmall { .. }
            | OutsideU(_)
            | DegenerateH
            | PoleEvaluation
            | BallExitsGrid(_) => ErrorClass::Hypothesis,
            TailUnresolved(_)
            | FitFailed(_)
            | NoConvergence { .. }
            | NotNormalized(_)
            | ConjugatePoint(_)
            | DominanceFailure { .. } => ErrorClass::Assertion,
        }
    }

    /// Short variant name, stable across releases; used in reports.
    pub fn kind(&self) -> &'static str {
        use Error::*;
        match self {
            DimensionTooLow(_) => "DimensionTooLow",
            PoleConditionViolated(_) => "PoleConditionViolated",
            NonPositiveWarp(_) => "NonPositiveWarp",
            PoleEvaluation => "PoleEvaluation",
            OutOfGrid { .. } => "OutOfGrid",
            TailUnresolved(_) => "TailUnresolved",
            EnvelopeDivergent => "EnvelopeDivergent",
            FitFailed(_) => "FitFailed",
            Parabolic => "Parabolic",
            Divergent(_) => "Divergent",
            NotGaugeable(_) => "NotGaugeable",
            NoConvergence { .. } => "NoConvergence",
            DegenerateH => "DegenerateH",
            NotNormalized(_) => "NotNormalized",
            OutsideU(_) => "OutsideU",
            ConjugatePoint(_) => "ConjugatePoint",
            HorizonTooSmall { .. } => "HorizonTooSmall",
            CurvatureHypothesisFails(_) => "CurvatureHypothesisFails",
            AVRUndefined(_) => "AVRUndefined",
            MeshTooCoarse { .. } => "MeshTooCoarse",
            BallExitsGrid(_) => "BallExitsGrid",
            BadParameters(_) => "BadParameters",
            KZero => "KZero",
            RadiusTooLarge(_) => "RadiusTooLarge",
            AlphaTooSmall { .. } => "AlphaTooSmall",
            DominanceFailure { .. } => "DominanceFailure",
            ConfigError(_) => "ConfigError",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
