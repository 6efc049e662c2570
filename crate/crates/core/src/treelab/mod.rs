//! Weighted shifts `(S h)(v) = lambda_v h(Phi v)` on `l^2` of finitely presented directed trees.

mod invariant;
mod lab;
mod predict;
mod sturm;
mod system;
mod window;

pub use invariant::{decompose_invariant, InvariantDecomposition, Line, Residual};
pub use lab::{
    certify, certify_against, default_tolerance, extrapolated_limit, pseudospectrum, section_sigma, verdict, Certification, Contradiction,
    GridPoint, GridSpec, LabOptions, PseudospectrumGrid, Sections, Verdict, VerdictCounts, MAX_UNDECIDED_FRACTION,
    MIN_ANGLES, MIN_RADII,
};
pub use predict::{critical_radii, is_invertible, predicted_spectrum, region_data, RegionData, PREDICTED_LABEL};
pub use sturm::Forest;
pub use system::{
    bilateral, builtin, contrexample, parse_tree, unilateral, CoreVertex, Next, Ray, Tail, TreeSystem, Vertex,
    WeightSequence,
};
pub use window::{truncate, window_order, WindowTruncation};
