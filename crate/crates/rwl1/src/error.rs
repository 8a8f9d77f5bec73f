use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: {source}", path.display())]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error("{}: {source}", path.display())]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("{}: {source}", path.display())]
    Toml {
        path: PathBuf,
        #[source]
        source: toml::de::Error,
    },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Solver(#[from] rwl1_core::Error),
    #[error("cannot start worker pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
}

impl Error {
    /// Whether the error stems from user input rather than from a solver.
    pub fn is_config(&self) -> bool {
        match self {
            Error::Solver(e) => matches!(
                e,
                rwl1_core::Error::Config(_)
                    | rwl1_core::Error::Spec(_)
                    | rwl1_core::Error::Dimension { .. }
                    | rwl1_core::Error::NonFinite(_)
                    | rwl1_core::Error::OracleRequired
                    | rwl1_core::Error::MissingEta
            ),
            _ => true,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
