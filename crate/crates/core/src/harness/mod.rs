//! Randomized property suites, coverage scans of the boundary image and
//! radial comparisons.

mod peano;
mod radial;
mod suites;

pub use peano::{
    largest_covered_disc, peano_scan, pilot_disc, truncation_for, CoverageGrid, ScanDisc,
    ScanOptions, PILOT_SHRINK,
};
pub use radial::{
    abel_check, calibrate_radial_constant, hausdorff_distance, radial_cluster_compare, AbelReport,
    AbelRow, ClusterReport,
};
pub use suites::{
    random_product, run_lemma_suite, ProductGenerator, PropertyReport, SecondaryCheck, SuiteConfig,
    PROPERTY_IDS,
};
