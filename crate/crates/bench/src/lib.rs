//! Fixtures shared by the benchmarks.

use blaschke_sums::{BlaschkeProduct, BoundaryPoint, CoefficientSequence, ConstantEstimates};
use num_complex::Complex64;

pub fn doubling() -> BlaschkeProduct {
    BlaschkeProduct::power(2).unwrap()
}

/// Zeros {0, 0, 0.5}: expanding but not a power map.
pub fn offset_zero() -> BlaschkeProduct {
    let zero = Complex64::new(0.0, 0.0);
    BlaschkeProduct::new(vec![zero, zero, Complex64::new(0.5, 0.0)]).unwrap()
}

pub fn harmonic() -> CoefficientSequence {
    CoefficientSequence::power(1.0, 1.0).unwrap()
}

/// Constants that drive the target solver on both fixtures.
pub fn manual_constants() -> ConstantEstimates {
    ConstantEstimates::manual(0.5, 0.3, 0.18, 0.9, 0.1, 4).unwrap()
}

/// A fixed boundary point carrying enough bits for `depth` iterates of `f`.
pub fn point_for(f: &BlaschkeProduct, depth: usize) -> BoundaryPoint {
    BoundaryPoint::parse(
        "0.318309886183790671537767526745",
        f.required_precision(depth, 53),
    )
    .unwrap()
}
