use thiserror::Error;

pub type Result<T> = std::result::Result<T, PsError>;

#[derive(Debug, Error)]
pub enum PsError {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("Birkhoff factorization failed{}: residual {residual:.3e}, tail {tail:.3e}", node_suffix(.node))]
    FactorizationFailure {
        residual: f64,
        tail: f64,
        node: Option<(f64, f64)>,
    },

    #[error("integration drift {drift:.3e} at t = {t}; use a smaller step")]
    IntegrationDrift { drift: f64, t: f64 },

    #[error("frame system is not integrable: path-independence residual {residual:.3e}")]
    Incompatible { residual: f64 },

    #[error("Goursat fixed-point iteration did not converge in cell ({i}, {j})")]
    Stiffness { i: usize, j: usize },

    #[error("rigid registration failed: {0}")]
    Registration(String),

    #[error("configuration error{}: {message}", key_suffix(.key))]
    Config { key: Option<String>, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn node_suffix(node: &Option<(f64, f64)>) -> String {
    match node {
        Some((x, y)) => format!(" at node (x = {x}, y = {y})"),
        None => String::new(),
    }
}

fn key_suffix(key: &Option<String>) -> String {
    match key {
        Some(k) => format!(" [{k}]"),
        None => String::new(),
    }
}

impl PsError {
    pub fn domain(msg: impl Into<String>) -> Self {
        PsError::Domain(msg.into())
    }

    pub fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        PsError::Config {
            key: Some(key.into()),
            message: message.into(),
        }
    }

    /// Attach grid coordinates to a factorization failure.
    pub fn at_node(self, x: f64, y: f64) -> Self {
        match self {
            PsError::FactorizationFailure { residual, tail, .. } => PsError::FactorizationFailure {
                residual,
                tail,
                node: Some((x, y)),
            },
            other => other,
        }
    }

    /// True for failures of the numerics (factorization, integration, Goursat).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            PsError::FactorizationFailure { .. } | PsError::IntegrationDrift { .. } | PsError::Stiffness { .. } | PsError::Incompatible { .. }
        )
    }
}
