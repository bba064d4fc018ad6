//! File formats, concurrent restarts, experiment drivers and the `rbn`
//! command line on top of `rbn-core`.

pub mod cli;
pub mod experiments;
pub mod fit;
pub mod io;
pub mod report;

use rbn_core::community::CommunityError;
use rbn_core::data::DataError;
use rbn_core::formula::ParseError;
use rbn_core::graph::GraphError;
use rbn_core::learn::{FitError, SampleError};

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Io(#[from] io::IoError),
    #[error("{path}:{source}")]
    Parse { path: String, source: ParseError },
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Fit(#[from] FitError),
    #[error(transparent)]
    Community(#[from] CommunityError),
    #[error(transparent)]
    Sample(#[from] SampleError),
}

pub const EXIT_USAGE: i32 = 2;
pub const EXIT_MODEL: i32 = 3;
pub const EXIT_NUMERICAL: i32 = 4;

fn graph_code(e: &GraphError) -> i32 {
    match e {
        GraphError::NonFinite(_) => EXIT_NUMERICAL,
        GraphError::ProbabilityOutOfRange { value, .. } | GraphError::NoisyOrInput(value) if !value.is_finite() => {
            EXIT_NUMERICAL
        }
        _ => EXIT_MODEL,
    }
}

fn fit_code(e: &FitError) -> i32 {
    match e {
        FitError::Config(_) => EXIT_USAGE,
        FitError::NothingToLearn => EXIT_MODEL,
        FitError::NonFiniteGradient(_) => EXIT_NUMERICAL,
        FitError::Graph(g) => graph_code(g),
    }
}

impl Error {
    /// Process exit code: 2 for usage and file errors, 3 for model
    /// errors, 4 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Usage(_) | Error::Io(_) => EXIT_USAGE,
            Error::Parse { .. } | Error::Data(_) | Error::Sample(_) => EXIT_MODEL,
            Error::Graph(e) => graph_code(e),
            Error::Fit(e) => fit_code(e),
            Error::Community(e) => match e {
                CommunityError::Graph(g) => graph_code(g),
                CommunityError::Fit(f) => fit_code(f),
                _ => EXIT_MODEL,
            },
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Reads and parses a model file.
pub fn load_model(path: &std::path::Path) -> Result<rbn_core::formula::Model> {
    let text = io::read_text(path)?;
    rbn_core::formula::parse_model(&text).map_err(|source| Error::Parse { path: path.display().to_string(), source })
}
