//! Error type shared by every module in the crate.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Failure modes of the operator algebra, the filtration machinery, the
/// bound evaluators, and the simulators.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// A matrix handed to a constructor differs from its conjugate
    /// transpose by more than the symmetry tolerance.
    #[error("matrix is not Hermitian: max asymmetry {max_asymmetry:.3e} exceeds tolerance {tol:.3e}")]
    NonHermitianInput { max_asymmetry: f64, tol: f64 },

    /// A matrix handed to a constructor contains NaN or infinite entries.
    #[error("matrix contains non-finite entries")]
    NonFiniteInput,

    /// A scalar function applied to the spectrum produced NaN or infinity.
    #[error("function value is not finite: f({eigenvalue:e}) = {value:e}")]
    NonFiniteResult { eigenvalue: f64, value: f64 },

    /// Two operators (or an operator and a space) disagree on dimension.
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    /// A filtration level outside `0..=factor_count` was requested.
    #[error("filtration level {level} out of range 0..={max}")]
    LevelOutOfRange { level: usize, max: usize },

    /// An independent-sum factor has positive mean, so the running sums
    /// cannot form a supermartingale.
    #[error("factor {factor} has trace mean {mean:.3e} > 0; sums are not a supermartingale")]
    NotSupermartingale { factor: usize, mean: f64 },

    /// A sequence element is not measurable at its filtration level.
    #[error("element {index} is not adapted: conditional-expectation residual {residual:.3e}")]
    NotAdapted { index: usize, residual: f64 },

    /// A verification mode requires a stronger sequence kind than the one
    /// established by classification.
    #[error("sequence classified as {found}, but mode requires {required}")]
    KindMismatch {
        required: &'static str,
        found: &'static str,
    },

    /// The per-step contraction constant is >= 1, so no power of it falls
    /// below the geometric-series threshold.
    #[error("no finite index: contraction constant {constant} is not below 1 (search capped at {cap})")]
    NoFiniteIndex { constant: f64, cap: u64 },

    /// Parameters violate a documented precondition.
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    /// An index window is empty or extends past the available sequence.
    #[error("invalid index range: {0}")]
    RangeError(String),

    /// A simulation horizon ends before the first checked index.
    #[error("horizon {horizon} ends before the first checked index {start}")]
    InvalidHorizon { horizon: usize, start: usize },

    /// Exact enumeration would visit more states than the configured cap.
    #[error("state space too large: {size} states exceeds cap {cap}")]
    StateSpaceTooLarge { size: u64, cap: u64 },

    /// Two structures that must agree (bound report and query, distribution
    /// and parameters) do not.
    #[error("parameter mismatch: {0}")]
    ParameterMismatch(String),
}
