//! Numerical workbench for rotationally symmetric model manifolds.
//!
//! The crate builds manifolds `dr^2 + w(r)^2 g_{S^{n-1}}` from a warping
//! profile and evaluates curvature envelopes, Green kernels and Kato
//! constants, the radial ABP transport pipeline, off-centre ball geometry
//! and a ledger of explicit constants.

pub mod error;
pub mod geometry;
pub mod grid;
pub mod ledger;
pub mod offcenter;
pub mod profile;
pub mod quad;
pub mod radial;
pub mod radial_fn;
pub mod transport;

pub use error::{Error, ErrorClass, Result};
pub use geometry::{build_manifold, CurvatureReport, ModelManifold};
pub use grid::{GridSpec, LogGrid, RadialField};
pub use ledger::{Calibration, ConstantLedger};
pub use offcenter::{DistanceField, MeshSpec};
pub use profile::{ProfileKind, Tail, WarpingProfile};
pub use radial_fn::RadialFn;
pub use transport::WeightedBallProblem;
