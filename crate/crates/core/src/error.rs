use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("point is not in the union of base frequency planks")]
    NotInUnion,
    #[error("infeasible family: cap `{cap}` is binding ({detail})")]
    Infeasible { cap: String, detail: String },
    #[error("exact method needs {needed} intersection terms (cap {cap}); use monte-carlo")]
    UseMonteCarlo { needed: usize, cap: usize },
    #[error("polytope is unbounded; supply a bounding box")]
    Unbounded,
    #[error("sample budget {0} is below the minimum of 1000")]
    SampleBudget(usize),
    #[error("config field `{field}`: {message}")]
    Config { field: String, message: String },
    #[error("unknown experiment `{0}`")]
    UnknownExperiment(String),
    #[error("io: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
