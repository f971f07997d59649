use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("nu undefined for empty set")]
    NuUndefinedForEmpty,

    #[error("ambient size mismatch: {left} vs {right}")]
    AmbientMismatch { left: usize, right: usize },

    #[error("{what} = {value} out of range [{min}, {max}]")]
    OutOfRange {
        what: &'static str,
        value: usize,
        min: usize,
        max: usize,
    },

    #[error("invalid subset: {0}")]
    InvalidSubset(String),

    #[error("partition does not fit the {rows}x{cols} box")]
    BoxViolation { rows: usize, cols: usize },

    #[error("epsilon undefined on overlapping subsets")]
    EpsilonOverlap,

    #[error("matrix shape mismatch: expected {expected}, got {got}")]
    Shape { expected: String, got: String },

    #[error("matrix has non-finite entries")]
    NonFinite,

    #[error("matrix is not hermitian (residual {residual:.3e})")]
    NotHermitian { residual: f64 },

    #[error("matrix is not unitary (residual {residual:.3e})")]
    NotUnitary { residual: f64 },

    #[error("Cayley pole: \u{2212}1 in spectrum")]
    CayleyPole,

    #[error("frame is not lagrangian")]
    NotLagrangian,

    #[error("lagrangian outside Arnold chart")]
    OutsideChart,

    #[error("flow horizon exceeded; rescale t")]
    FlowHorizon,

    #[error("limit not resolved")]
    LimitNotResolved,

    #[error("spectral gap too small to classify")]
    SpectralGap,

    #[error("invalid flow spec: {0}")]
    InvalidFlowSpec(String),

    #[error("loop undersampled")]
    LoopUndersampled,

    #[error("non-generic loop; perturb \u{3c1}")]
    NonGenericLoop,

    #[error("invalid loop: {0}")]
    InvalidLoop(String),

    #[error("integer overflow in class coefficients")]
    Overflow,

    #[error("unknown verification suite {0:?}")]
    UnknownSuite(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
