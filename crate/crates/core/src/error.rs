use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Constraint family reported when a schedule problem has no feasible point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConstraintFamily {
    EndOfDaySoc,
    CycleCap,
    PowerBalance,
    Unknown,
}

impl std::fmt::Display for ConstraintFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            ConstraintFamily::EndOfDaySoc => "end-of-day state of charge",
            ConstraintFamily::CycleCap => "daily cycle cap",
            ConstraintFamily::PowerBalance => "power balance",
            ConstraintFamily::Unknown => "unidentified constraint",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: row {row}: {message}")]
    Load {
        path: PathBuf,
        row: usize,
        message: String,
    },

    #[error("input file not found: {0}")]
    MissingFile(PathBuf),

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("interpolation error: {0}")]
    Interpolation(String),

    #[error("alignment error: {0}")]
    Alignment(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("scaling error: {0}")]
    Scaling(String),

    #[error("infeasible schedule problem: {0} cannot be satisfied")]
    Infeasible(ConstraintFamily),

    #[error("solver failure: {0}")]
    Solver(String),

    #[error("solver hit its time limit (incumbent gap {gap:?})")]
    Timeout { gap: Option<f64> },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("life curve error: {0}")]
    Curve(String),

    #[error("instance too large: {0}")]
    TooLarge(String),

    #[error("day {day}: {source}")]
    Day {
        day: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn on_day(self, day: usize) -> Error {
        Error::Day {
            day,
            source: Box::new(self),
        }
    }

    /// Innermost error, skipping any day annotations.
    pub fn root(&self) -> &Error {
        match self {
            Error::Day { source, .. } => source.root(),
            other => other,
        }
    }

    /// Short machine-readable tag for the error family.
    pub fn kind(&self) -> &'static str {
        match self.root() {
            Error::Load { .. } => "load",
            Error::MissingFile(_) => "missing_file",
            Error::Io { .. } => "io",
            Error::Csv(_) => "csv",
            Error::Interpolation(_) => "interpolation",
            Error::Alignment(_) => "alignment",
            Error::Precondition(_) => "precondition",
            Error::Config(_) => "config",
            Error::Scaling(_) => "scaling",
            Error::Infeasible(_) => "infeasible",
            Error::Solver(_) => "solver",
            Error::Timeout { .. } => "timeout",
            Error::Domain(_) => "domain",
            Error::Curve(_) => "curve",
            Error::TooLarge(_) => "too_large",
            Error::Day { .. } => unreachable!(),
        }
    }
}
