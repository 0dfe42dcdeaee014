//! Sums of iterates of finite Blaschke products.
//!
//! The crate is layered bottom-up:
//!
//! * [`product`] and [`boundary`]: the products themselves, exact dyadic
//!   boundary points, high-precision orbits;
//! * [`orbit`]: a reference-orbit engine that evaluates deep iterates of many
//!   nearby boundary points cheaply;
//! * [`geometry`]: arcs, the argument lift and arc images;
//! * [`series`]: coefficient sequences and partial sums;
//! * [`solver`]: block plans, searches, the target solver, the lower-bound
//!   certifier and calibration of constants;
//! * [`harness`]: property suites, coverage scans and radial comparisons.

// Checks written as `!(x > y)` also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

/// Version of this crate, echoed in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub mod boundary;
pub mod error;
pub mod ext;
pub mod geometry;
pub mod harness;
pub mod orbit;
pub mod product;
pub mod series;
pub mod solver;

pub use boundary::{
    evaluate_boundary, iterate_boundary, iterate_interior, near_boundary_orbit, BoundaryPoint,
};
pub use error::{Error, Result};
pub use ext::ExtF64;
pub use geometry::{
    arc_from_point, arc_image, argument_lift, check_full_image_property,
    find_subarc_with_image_measure, point_from_arc, Arc, ArcImageResult,
};
pub use orbit::{ReferenceOrbit, SumChart};
pub use product::{
    cis_turn, golden_section, poisson_kernel, pseudohyperbolic, BlaschkeProduct, DiskPoint,
    ExpansionConstants,
};
pub use series::{
    check_tail_ratio, oscillation_on_arc, parse_complex, partial_sum, tail_abs_sum,
    weighted_geometric_tail, CoefficientSequence, DeclaredFlags, PartialSumState, PhaseRule,
    SeriesPoint, TailSum,
};

pub use harness::{
    abel_check, peano_scan, radial_cluster_compare, run_lemma_suite, CoverageGrid, PropertyReport,
    ScanDisc, ScanOptions, SuiteConfig,
};
pub use solver::{
    build_block_plan, calibrate_constants, certify_lower_bound, cluster_follow, contraction_step,
    paley_solve, search_block_maximizer, BlockPlan, CalibrationBudget, ConstantEstimates,
    NearPoint, PaleyOptions, SolverTrace,
};
