use thiserror::Error;

/// Everything that can go wrong in the toolkit.
///
/// Variants split into two families: contract violations (bad input, a
/// precondition the caller could have checked) and numerical failures
/// (precision, quadrature, stalls).  The CLI maps them to different exit codes
/// through [`Error::is_numerical`].
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("zero #{index} has modulus {modulus}, must be < 1")]
    ZeroOutsideDisk { index: usize, modulus: f64 },

    #[error("pole proximity: |1 - conj(a) z| = {0:e} for a legal zero")]
    PoleProximity(f64),

    #[error("precision budget exceeded: need {needed} bits, point carries {available}")]
    PrecisionBudget { needed: u32, available: u32 },

    #[error("product is not expanding on the circle: k_min = {k_min}")]
    NotExpanding { k_min: f64 },

    #[error("quadrature did not converge on [{from}, {to}] within depth {depth}")]
    QuadratureNonconvergence { from: f64, to: f64, depth: u32 },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("operation undefined for the full circle")]
    FullCircle,

    #[error("infeasible request: {0}")]
    Infeasible(String),

    #[error("tail sum is unbounded: coefficients are not declared absolutely summable")]
    UnboundedTail,

    #[error("degenerate orbit: {0}")]
    DegenerateOrbit(String),

    #[error("invalid block geometry: {0}")]
    InvalidGeometry(String),

    #[error("construction stalled at block {block}: {reason}")]
    ConstructionStall { block: usize, reason: String },

    #[error("contraction failed: |new residual| = {achieved:e} > required {required:e}")]
    ContractionFailure { achieved: f64, required: f64 },

    #[error("solver stalled after {rounds} rounds with residual {residual:e}")]
    Stall {
        rounds: usize,
        residual: f64,
        trace: Box<crate::solver::SolverTrace>,
    },

    #[error("calibration failure: {0}")]
    CalibrationFailure(String),

    #[error("sample budget exhausted before refinement finished")]
    BudgetExhausted,

    #[error("unknown property id '{0}'")]
    UnknownProperty(String),
}

impl Error {
    /// True for failures of the numerics (as opposed to caller mistakes).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::PrecisionBudget { .. }
                | Error::QuadratureNonconvergence { .. }
                | Error::DegenerateOrbit(_)
                | Error::ConstructionStall { .. }
                | Error::ContractionFailure { .. }
                | Error::Stall { .. }
                | Error::CalibrationFailure(_)
                | Error::BudgetExhausted
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
