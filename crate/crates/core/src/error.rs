use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid program terms: {0}")]
    InvalidTerms(String),

    #[error(
        "ill-posed program: pi_r - p * pi_p = {margin} >= 0 rewards contracting without capability"
    )]
    IllPosedProgram { margin: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("distributions are not alignable: {0}")]
    Unalignable(String),

    #[error("covariance model: {0}")]
    InvalidCovariance(String),

    #[error("event probability is zero; the contract is unconstrained by events")]
    NoEvents,

    #[error("contract is unbounded: quantile argument {psi} >= 1 and no c_max is set")]
    UnboundedContract { psi: f64 },

    #[error("estimation: {0}")]
    Estimation(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("model consistency: {0}")]
    Model(String),

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            context: context.into(),
            source,
        }
    }
}

impl Error {
    /// Process exit status: 2 for bad input, 3 for inputs that parse but
    /// cannot be reconciled by the model.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Unalignable(_)
            | Error::Model(_)
            | Error::InvalidCovariance(_)
            | Error::NoEvents
            | Error::UnboundedContract { .. } => 3,
            _ => 2,
        }
    }
}
