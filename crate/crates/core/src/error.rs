use thiserror::Error;

/// Errors raised by the numerical routines and config ingestion.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    #[error("invalid point sequence: {0}")]
    InvalidPoints(String),

    #[error("pole hit: |{what}| = {value:e} at t = {t}")]
    PoleHit { what: String, value: f64, t: String },

    #[error("operation requires pairwise distinct alphas ({0})")]
    RepeatedPoints(String),

    #[error("grid too coarse: quadrature changed from {coarse} to {fine} under grid doubling")]
    GridTooCoarse { coarse: f64, fine: f64 },

    #[error("quadrature instability: grid doubling changed {what} by {gap:e}")]
    QuadratureUnstable { what: String, gap: f64 },

    #[error("measure is not in the Szego class: {0}")]
    NonSzego(String),

    #[error("singular Gram matrix at index {index}: pivot {pivot:e} below tolerance {tol:e}")]
    SingularGram { index: usize, pivot: f64, tol: f64 },

    #[error("matrix is indefinite: min eigenvalue {min_eig:e} below tolerance {tol:e}")]
    Indefinite { min_eig: f64, tol: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("rank deficient {what}: singular value ratio {ratio:e}")]
    RankDeficient { what: String, ratio: f64 },

    #[error("{what}: residual {residual:e} exceeds {tol:e}")]
    ResidualTooLarge { what: String, residual: f64, tol: f64 },

    #[error("inconsistent entry ({row}, {col}): recurrence residual {residual:e}")]
    InconsistentEntry { row: usize, col: usize, residual: f64 },

    #[error("not causal at R = {radius}: denominator root {root} has modulus {modulus}")]
    NotCausal { radius: f64, root: String, modulus: f64 },

    #[error("numerator and denominator share a root (resultant {0:e})")]
    CommonRoots(f64),

    #[error("insufficient covariance window: {0}")]
    InsufficientWindow(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("no convergence: {0}")]
    NoConvergence(String),

    #[error("config error in `{field}`: {message}")]
    Config { field: String, message: String },
}

impl Error {
    /// True for input-validation failures, false for numerical failures.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidMeasure(_)
                | Error::InvalidPoints(_)
                | Error::RepeatedPoints(_)
                | Error::DimensionMismatch(_)
                | Error::Unsupported(_)
                | Error::Config { .. }
        )
    }

    /// Stable snake_case name of the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidMeasure(_) => "invalid_measure",
            Error::InvalidPoints(_) => "invalid_points",
            Error::PoleHit { .. } => "pole_hit",
            Error::RepeatedPoints(_) => "repeated_points",
            Error::GridTooCoarse { .. } => "grid_too_coarse",
            Error::QuadratureUnstable { .. } => "quadrature_unstable",
            Error::NonSzego(_) => "non_szego",
            Error::SingularGram { .. } => "singular_gram",
            Error::Indefinite { .. } => "indefinite",
            Error::DimensionMismatch(_) => "dimension_mismatch",
            Error::RankDeficient { .. } => "rank_deficient",
            Error::ResidualTooLarge { .. } => "residual_too_large",
            Error::InconsistentEntry { .. } => "inconsistent_entry",
            Error::NotCausal { .. } => "not_causal",
            Error::CommonRoots(_) => "common_roots",
            Error::InsufficientWindow(_) => "insufficient_window",
            Error::Unsupported(_) => "unsupported",
            Error::NoConvergence(_) => "no_convergence",
            Error::Config { .. } => "config",
        }
    }

    pub fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
