//! Error type shared by every module of the crate.

use thiserror::Error;

use crate::exprlang::ExprError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Failure modes of the numerical routines.
///
/// Every message starts with the variant name so that command-line users can
/// grep for it.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("NonFiniteEvaluation: {0}")]
    NonFiniteEvaluation(String),

    #[error("RankDeficient: smallest retained singular value {sigma_min:e} <= tolerance {tol:e}")]
    RankDeficient { sigma_min: f64, tol: f64 },

    #[error("InsufficientSamples: need at least {need}, got {got}")]
    InsufficientSamples { need: usize, got: usize },

    #[error("BelowFloor: only {retained} point(s) above the noise floor {floor:e}")]
    BelowFloor { retained: usize, floor: f64 },

    #[error("DimensionMismatch: {0}")]
    DimensionMismatch(String),

    #[error("NotSquare: distribution rank {d} differs from kernel dimension {kernel} (n={n}, m={m})")]
    NotSquare { n: usize, m: usize, d: usize, kernel: usize },

    #[error("NonGraph: the fiber block of the distribution basis is singular")]
    NonGraph,

    #[error("DegenerateHessian: condition number {condition:e} exceeds cap {cap:e}")]
    DegenerateHessian { condition: f64, cap: f64 },

    #[error("MaxIterExceeded: {iterations} iterations, last residual {residual:e}")]
    MaxIterExceeded { iterations: usize, residual: f64 },

    #[error("BranchJump: step {jump:e} exceeds jump cap {cap:e}")]
    BranchJump { jump: f64, cap: f64 },

    #[error("BaseMismatch: families differ by {gap:e} at t=0")]
    BaseMismatch { gap: f64 },

    #[error("NotInZeroSection: |f(x,0)| = {value:e}")]
    NotInZeroSection { value: f64 },

    #[error("MissingTargetH: family has no codomain h")]
    MissingTargetH,

    #[error("NotHCompatible: h_N(f(x,0)) = {value:e}")]
    NotHCompatible { value: f64 },

    #[error("InversionFailed: {0}")]
    InversionFailed(String),

    #[error("NotDiagonal: {0}")]
    NotDiagonal(String),

    #[error("PsiInversionFailed: {0}")]
    PsiInversionFailed(String),

    #[error("NewtonFailed: {iterations} iterations, residual {residual:e}")]
    NewtonFailed { iterations: usize, residual: f64 },

    #[error("DataContactViolation: {which}: {detail}")]
    DataContactViolation { which: String, detail: String },

    #[error("SingularSystem: condition number {condition:e}")]
    SingularSystem { condition: f64 },

    #[error("NotCriticalPoint: |alpha on D| = {residual:e}")]
    NotCriticalPoint { residual: f64 },

    #[error("HypothesisViolated: generator {generator}: {hypothesis} (discrepancy {discrepancy:e})")]
    HypothesisViolated { generator: usize, hypothesis: String, discrepancy: f64 },

    #[error("GroupNotFinite: {0}")]
    GroupNotFinite(String),

    #[error("InvalidArgument: {0}")]
    InvalidArgument(String),

    #[error("ConfigError: {0}")]
    Config(String),

    #[error("{0}")]
    Expr(#[from] ExprError),
}

impl Error {
    /// Variant name without payload, used in reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::NonFiniteEvaluation(_) => "NonFiniteEvaluation",
            Error::RankDeficient { .. } => "RankDeficient",
            Error::InsufficientSamples { .. } => "InsufficientSamples",
            Error::BelowFloor { .. } => "BelowFloor",
            Error::DimensionMismatch(_) => "DimensionMismatch",
            Error::NotSquare { .. } => "NotSquare",
            Error::NonGraph => "NonGraph",
            Error::DegenerateHessian { .. } => "DegenerateHessian",
            Error::MaxIterExceeded { .. } => "MaxIterExceeded",
            Error::BranchJump { .. } => "BranchJump",
            Error::BaseMismatch { .. } => "BaseMismatch",
            Error::NotInZeroSection { .. } => "NotInZeroSection",
            Error::MissingTargetH => "MissingTargetH",
            Error::NotHCompatible { .. } => "NotHCompatible",
            Error::InversionFailed(_) => "InversionFailed",
            Error::NotDiagonal(_) => "NotDiagonal",
            Error::PsiInversionFailed(_) => "PsiInversionFailed",
            Error::NewtonFailed { .. } => "NewtonFailed",
            Error::DataContactViolation { .. } => "DataContactViolation",
            Error::SingularSystem { .. } => "SingularSystem",
            Error::NotCriticalPoint { .. } => "NotCriticalPoint",
            Error::HypothesisViolated { .. } => "HypothesisViolated",
            Error::GroupNotFinite(_) => "GroupNotFinite",
            Error::InvalidArgument(_) => "InvalidArgument",
            Error::Config(_) => "ConfigError",
            Error::Expr(e) => e.kind(),
        }
    }
}
