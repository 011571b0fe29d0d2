use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("domain error: {0}")]
    Domain(String),

    /// A chain or integrator produced a non-finite iterate.
    #[error("divergence in {context} at step {step}")]
    Divergence { context: String, step: u64 },

    #[error("adaptive solver stalled after {rejections} consecutive rejected steps at sigma={sigma}")]
    StalledSolver { rejections: u64, sigma: f64 },

    #[error("contract violation: {0}")]
    ContractViolation(String),

    #[error("training diverged at epoch {epoch}: loss={loss}")]
    TrainingDiverged { epoch: usize, loss: f64 },

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("insufficient data: need at least {needed} samples, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("internal error: {0}")]
    Internal(String),

    #[error("invalid configuration:\n  - {}", .0.join("\n  - "))]
    Config(Vec<String>),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("image encoding: {0}")]
    Image(#[from] image::ImageError),
}

impl Error {
    /// Prefixes divergence context, used when an integrator failure bubbles up
    /// through a chain.
    pub fn in_context(self, outer: &str) -> Self {
        match self {
            Error::Divergence { context, step } => Error::Divergence {
                context: format!("{outer}: {context}"),
                step,
            },
            other => other,
        }
    }
}

pub(crate) fn ensure_finite(values: &[f64], what: &str) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("{what} contains non-finite values")))
    }
}
