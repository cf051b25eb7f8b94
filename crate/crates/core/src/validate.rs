use thiserror::Error;

/// A configuration value that violates its contract, named by its dotted
/// field path (`orientation_noise.uniform_floor`, `camera.fx`, ...).
#[derive(Debug, Clone, PartialEq, Error)]
#[error("{field}: {message}")]
pub struct ValidationError {
    pub field: String,
    pub message: String,
}

impl ValidationError {
    pub fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            field: field.into(),
            message: message.into(),
        }
    }

    /// Prefixes the field path, e.g. `camera.fx` -> `scenario.camera.fx`.
    pub fn within(mut self, parent: &str) -> Self {
        self.field = format!("{parent}.{}", self.field);
        self
    }
}

pub(crate) fn ensure(cond: bool, field: impl Into<String>, message: impl Into<String>) -> Result<(), ValidationError> {
    if cond {
        Ok(())
    } else {
        Err(ValidationError::new(field, message))
    }
}
