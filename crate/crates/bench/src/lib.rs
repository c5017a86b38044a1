//! Fixtures shared by the benchmarks in `benches/`.

use std::sync::Arc;
use warpbench_core::{build_manifold, GridSpec, ModelManifold, WarpingProfile};

pub fn manifold(n: usize, p: WarpingProfile) -> ModelManifold {
    let g = GridSpec::for_profile(&p);
    build_manifold(n, p, g).expect("fixture profile builds")
}

/// The perturbed Euclidean bump in dimension 3.
pub fn perturbed() -> ModelManifold {
    manifold(3, WarpingProfile::standard_perturbed())
}

/// The smoothed cone of slope 1/2 in dimension 3.
pub fn cone() -> Arc<ModelManifold> {
    Arc::new(manifold(3, WarpingProfile::cone(0.5).expect("valid slope")))
}
