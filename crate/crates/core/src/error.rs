use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GameError {
    /// An input violated a type invariant (probability out of range, bad normalization, ...).
    #[error("invalid input: {0}")]
    Validation(String),

    /// The input is valid but outside the domain where the requested formula holds.
    #[error("outside domain: {0}")]
    Domain(String),

    /// The request exceeds a fixed computational budget.
    #[error("budget exceeded: {what} (limit {limit})")]
    Budget { what: String, limit: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("no sign change of the advantage gap found for n = {n}")]
    NoSignChange { n: usize },
}

pub type Result<T> = std::result::Result<T, GameError>;

pub(crate) fn check_open_unit(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        Err(GameError::Validation(format!(
            "{name} must lie strictly inside (0, 1), got {v}"
        )))
    }
}
