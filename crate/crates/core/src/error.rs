use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("point off manifold: |closest_point(p) - p| = {dist:e} exceeds tolerance {tol:e}")]
    OffManifold { dist: f64, tol: f64 },

    #[error("non-tangent input: normal component {residual:e} exceeds tolerance {tol:e}")]
    NonTangent { residual: f64, tol: f64 },

    #[error("augmentation positivity failed: lambda = {lambda} gives c = {c:e} (deficit {deficit:e})")]
    AugmentationDeficit { lambda: f64, c: f64, deficit: f64 },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("resolution too coarse: {0}")]
    Resolution(String),

    #[error("matrix is not symmetric positive definite: {0}")]
    NotSpd(String),

    #[error("solver failure: {0}")]
    Solver(String),

    #[error("degenerate map: {0}")]
    DegenerateMap(String),

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("retraction left the tubular neighborhood (step too large): {0}")]
    RetractionStep(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("unknown manifold key: {0}")]
    UnknownManifold(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}
