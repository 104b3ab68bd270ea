use thiserror::Error;

pub type Result<T, E = GlssError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum GlssError {
    #[error("invalid alphabet: {0}")]
    InvalidAlphabet(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid transition matrix: {0}")]
    InvalidTransition(String),

    #[error("invalid switching specification: {0}")]
    InvalidSwitching(String),

    /// The mean-square stability condition fails: the spectral radius of
    /// `sum_s p_s A_s (x) A_s` is not below one.
    #[error("unstable model: stability radius {rho:.6} >= 1 (mean-square stability condition)")]
    Unstable { rho: f64 },

    #[error("window error: {0}")]
    Window(String),

    #[error("unknown process `{0}`")]
    Lookup(String),

    #[error("input error: {0}")]
    Input(String),

    #[error("singular regression (dimension {dim}); use a positive ridge")]
    SingularRegression { dim: usize },

    #[error("no convergence after {iterations} iterations (last update {residual:.3e})")]
    Convergence { iterations: usize, residual: f64 },

    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    #[error("memory budget exceeded: {requested} entries requested, budget {budget}; use a smaller depth")]
    Memory { requested: usize, budget: usize },

    #[error("{path}: {message}")]
    Format { path: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl GlssError {
    pub(crate) fn dim(msg: impl Into<String>) -> Self {
        GlssError::Dimension(msg.into())
    }

    pub(crate) fn format(path: impl Into<String>, message: impl Into<String>) -> Self {
        GlssError::Format {
            path: path.into(),
            message: message.into(),
        }
    }
}
