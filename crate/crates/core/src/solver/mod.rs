//! Constructive algorithms: block plans, boundary searches, the lower-bound
//! certifier, the target solver, the cluster follower and calibration.

mod blocks;
pub(crate) mod calibrate;
mod certify;
mod paley;
mod search;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub use blocks::{build_block_plan, BlockPlan};
pub use calibrate::{
    calibrate_constants, gap_length, CalibrationBudget, CalibrationEntry, ConstantEstimates,
};
pub use certify::{certify_lower_bound, certify_with_shift, CertifyOutcome};
pub use paley::{
    cluster_follow, cluster_follow_with, contraction_step, paley_solve, paley_solve_with,
    PaleyOptions,
};
pub use search::{search_block_maximizer, search_block_maximizer_shifted, NearPoint};

use crate::boundary::BoundaryPoint;
use crate::geometry::Arc;

/// Which branch of a construction produced a block.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CaseTag {
    Initial,
    /// Small coefficients: a block of prescribed mass and a contraction step.
    #[serde(rename = "case-i")]
    CaseI,
    /// A large coefficient: a single-term block.
    #[serde(rename = "case-ii")]
    CaseII,
    /// A long block of the lower-bound construction.
    Long,
}

/// Index ranges of one round: terms `start..=end`, of which
/// `start..gap_end` form the gap before the block proper.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockRecord {
    pub round: usize,
    pub start: usize,
    pub gap_end: usize,
    pub end: usize,
    pub case: CaseTag,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartialSumRecord {
    pub round: usize,
    pub depth: usize,
    pub value: Complex64,
    pub case: CaseTag,
}

/// A target reached by the cluster follower.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TargetVisit {
    pub target_index: usize,
    pub target: Complex64,
    pub round: usize,
    pub depth: usize,
    pub residual: f64,
    pub point: BoundaryPoint,
}

/// Everything a construction did, for inspection and re-verification.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SolverTrace {
    pub kind: String,
    pub target: Option<Complex64>,
    /// Nested arcs `I_1 ⊃ I_2 ⊃ ...`.
    pub arcs: Vec<Arc>,
    /// Depth at which each arc's image has the working measure.
    pub arc_depths: Vec<usize>,
    pub blocks: Vec<BlockRecord>,
    /// Minimum distances `d_k` (target solver) per round.
    pub residuals: Vec<f64>,
    /// Spread of the partial sums over each arc.
    pub oscillations: Vec<f64>,
    /// `|f^M(z*)|` after each gap.
    pub gap_moduli: Vec<f64>,
    pub partial_sum_log: Vec<PartialSumRecord>,
    pub visits: Vec<TargetVisit>,
    pub witness: Option<BoundaryPoint>,
    pub witness_depth: usize,
    /// Residual or ratio as tracked by the search.
    pub final_value: f64,
    /// The same quantity recomputed from scratch at full precision.
    pub recomputed_value: f64,
    pub certified: bool,
    pub eta_used: f64,
    pub notes: Vec<String>,
}

impl SolverTrace {
    pub(crate) fn new(kind: &str) -> Self {
        SolverTrace {
            kind: kind.to_string(),
            ..Default::default()
        }
    }
}
