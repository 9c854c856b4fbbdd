use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("config error: {0}")]
    Config(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("capability exceeded: {0}")]
    Capability(String),
    #[error("integration failure: {0}")]
    Integration(String),
    #[error("root finding failed: {0}")]
    RootFind(String),
    #[error("interlacing violated: {0}")]
    Interlacing(String),
    #[error("Dirichlet pole: {0}")]
    Pole(String),
    #[error("no convergence: {0}")]
    NonConvergence(String),
    #[error("z lies on a gap cut: {0}")]
    OnGapCut(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}
