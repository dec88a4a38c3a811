use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter lies outside the set where the quantity is defined.
    #[error("domain error: {what} (got {value})")]
    Domain { what: &'static str, value: f64 },

    #[error("kernel is singular at x = {x} (x is congruent to 0 mod 2π)")]
    Singularity { x: f64 },

    #[error("quadrature error estimate {estimate:.3e} exceeds tolerance {tolerance:.3e}")]
    Accuracy { estimate: f64, tolerance: f64 },

    #[error("grid with {n} points cannot resolve {m} cosine modes without aliasing")]
    Aliasing { n: usize, m: usize },

    #[error("invalid grid size {n}: must be a power of two and at least 4")]
    GridSize { n: usize },

    #[error("second derivative is unbounded at x = 0 for p = {p} without regularisation")]
    NonsmoothPoint { p: f64 },

    #[error("root finding failed: {0}")]
    RootFind(String),

    #[error("Newton iteration did not converge after {iterations} iterations (last residual {residual:.3e})")]
    Convergence { iterations: usize, residual: f64 },

    #[error("Jacobian is near-singular (condition estimate {condition:.3e})")]
    NearSingular { condition: f64 },

    #[error("only {nodes} grid nodes in fit window, at least {required} needed")]
    InsufficientData { nodes: usize, required: usize },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("invalid configuration: field `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("{stage}: {source}")]
    Stage {
        stage: String,
        #[source]
        source: Box<Error>,
    },

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error in {path}: {message}")]
    Parse { path: PathBuf, message: String },
}

impl Error {
    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Wraps the error with the name of the stage that produced it.
    pub fn in_stage(self, stage: impl Into<String>) -> Self {
        Error::Stage {
            stage: stage.into(),
            source: Box::new(self),
        }
    }

    /// Innermost error, looking through stage context.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } => source.root(),
            other => other,
        }
    }

    /// Short machine-readable category name.
    pub fn kind(&self) -> &'static str {
        match self.root() {
            Error::Domain { .. } => "domain",
            Error::Singularity { .. } => "singularity",
            Error::Accuracy { .. } => "accuracy",
            Error::Aliasing { .. } => "aliasing",
            Error::GridSize { .. } => "grid_size",
            Error::NonsmoothPoint { .. } => "nonsmooth_point",
            Error::RootFind(_) => "root_find",
            Error::Convergence { .. } => "convergence",
            Error::NearSingular { .. } => "near_singular",
            Error::InsufficientData { .. } => "insufficient_data",
            Error::Unsupported(_) => "unsupported",
            Error::Config { .. } => "config",
            Error::Io { .. } => "io",
            Error::Parse { .. } => "parse",
            Error::Stage { .. } => unreachable!(),
        }
    }

    /// Process exit code: 2 for configuration, 4 for IO, 3 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self.root() {
            Error::Config { .. } | Error::Parse { .. } => 2,
            Error::Io { .. } => 4,
            _ => 3,
        }
    }
}
