use thiserror::Error;

/// Errors produced by the PEP engine.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum PepError {
    #[error("design matrix is rank deficient: {0}")]
    RankDeficient(String),
    #[error("matrix is not positive definite: {0}")]
    NotPositiveDefinite(String),
    #[error("argument outside the domain: {0}")]
    Domain(String),
    #[error("every log-weight is -inf")]
    AllNegInf,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("operation requires the g-prior baseline")]
    WrongBaseline,
    #[error("imaginary sample is perfectly fitted (RSS* = {0:e})")]
    DegenerateTraining(f64),
    #[error("posterior scale b~ is not positive ({0})")]
    NonpositiveBTilde(f64),
    #[error("degrees of freedom must be positive ({0})")]
    NonpositiveDof(f64),
    #[error("quadrature did not converge: {0}")]
    IntegrationFailure(String),
    #[error("importance weights degenerate: ess {ess:.3} below floor {floor:.3}")]
    Degenerate { ess: f64, floor: f64 },
    #[error("model space with {0} candidates is too large to enumerate")]
    SpaceTooLarge(usize),
    #[error("no variable has inclusion probability above {0}")]
    EmptyReduction(f64),
    #[error("invalid dataset: {0}")]
    InvalidData(String),
    #[error("model {model}: {source}")]
    InModel {
        model: String,
        #[source]
        source: Box<PepError>,
    },
}

impl PepError {
    /// Attaches the label of the model being evaluated.
    pub fn in_model(self, model: impl Into<String>) -> Self {
        match self {
            e @ PepError::InModel { .. } => e,
            e => PepError::InModel {
                model: model.into(),
                source: Box::new(e),
            },
        }
    }

    /// The innermost error, with model context stripped.
    pub fn root(&self) -> &PepError {
        match self {
            PepError::InModel { source, .. } => source.root(),
            e => e,
        }
    }
}

pub type Result<T> = std::result::Result<T, PepError>;
