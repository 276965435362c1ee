use thiserror::Error;

/// Errors raised anywhere in the pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("inverted element: det(F) = {det:.6e} (element {element:?})")]
    InvertedElement { det: f64, element: Option<usize> },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("load step underflow at t = {t:.6e}: dt = {dt:.3e} < dt_min ({cause})")]
    StepUnderflow { t: f64, dt: f64, cause: String },

    #[error("singular tangent: {0}")]
    SingularTangent(String),

    #[error("singular system: {0}")]
    SingularSystem(String),

    #[error("non-physical result: {0}")]
    NonPhysical(String),

    #[error("ill-conditioned correlation matrix (nugget up to {nugget:.1e})")]
    IllConditioned { nugget: f64 },

    #[error("equilibrium not converged: {0}")]
    NotConverged(String),

    #[error("row {row}: {source}")]
    Row {
        row: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn at_row(self, row: usize) -> Self {
        Error::Row {
            row,
            source: Box::new(self),
        }
    }
}
