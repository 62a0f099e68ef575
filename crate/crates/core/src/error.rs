use std::path::PathBuf;

/// Errors produced anywhere in the estimation and geometry pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("invalid component spec: {0}")]
    InvalidSpec(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("SVD did not converge after {sweeps} sweeps")]
    SvdNonConvergence { sweeps: usize },

    #[error("unsupported operation: {0}")]
    Unsupported(&'static str),

    #[error("backtracking exceeded {max_backtracks} step reductions at iteration {iteration}")]
    BacktrackingExhausted {
        iteration: usize,
        max_backtracks: usize,
    },

    #[error("non-finite objective at iteration {iteration}")]
    NonFiniteObjective { iteration: usize },

    #[error("cone sampler accepted {accepted} of {requested} directions after {draws} draws")]
    InsufficientSamples {
        accepted: usize,
        requested: usize,
        draws: usize,
    },

    #[error("degenerate cone: {0}")]
    DegenerateCone(String),

    #[error("I/O error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error at {path}, line {line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_len(context: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch {
            context,
            expected,
            found,
        });
    }
    Ok(())
}
