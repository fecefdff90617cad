use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QgeoError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("degenerate Hamiltonian: {0}")]
    Degenerate(String),
    #[error("undefined at the transition point: {0}")]
    TransitionPoint(String),
    #[error("inconsistent geometry: {0}")]
    Inconsistency(String),
    #[error("finite-difference step too large: {0}")]
    StepTooLarge(String),
    #[error("singular projector construction: {0}")]
    Singular(String),
    #[error("undefined classical Fisher information: {0}")]
    UndefinedCfim(String),
}

pub type Result<T> = std::result::Result<T, QgeoError>;

pub(crate) fn ensure_finite(values: &[f64], what: &str) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(QgeoError::Domain(format!("non-finite {what}")))
    }
}
