use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid manifold: {0}")]
    InvalidManifold(String),

    #[error("point is not on the manifold: {0}")]
    NotOnManifold(String),

    #[error("vector is not tangent at the base point (residual {residual:e})")]
    NotTangent { residual: f64 },

    #[error("vector has non-finite entries")]
    NonFinite,

    #[error("matrix is not orthogonal (max deviation {deviation:e})")]
    NotOrthogonal { deviation: f64 },

    #[error("zero direction at index {0}")]
    ZeroDirection(usize),

    #[error("empty direction set")]
    EmptySet,

    #[error(
        "cosine measure enumeration budget exceeded (m = {m}, |D| = {size}); \
         use the sampled cosine measure instead"
    )]
    EnumerationBudget { m: usize, size: usize },

    #[error("support size {k} exceeds the enumeration budget of {max}; use the generic tangent cosine measure")]
    SupportBudget { k: usize, max: usize },

    #[error("set is not positively spanning (cosine measure {0})")]
    NotPositiveSpanning(f64),

    #[error("every projected direction vanished")]
    EmptyProjectedSet,

    #[error("failed to build a tangent basis after {0} attempts")]
    BasisDegenerate(usize),

    #[error("cholesky factorization failed")]
    Cholesky,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("problem has no euclidean gradient")]
    MissingGradient,

    #[error("trace has no recorded diagnostics; rerun with record_diagnostics enabled")]
    MissingDiagnostics,

    #[error("internal error: {0}")]
    Internal(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
