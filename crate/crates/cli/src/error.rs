use gsmarray::Error;
use thiserror::Error;

/// Command failure, grouped by exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),

    #[error("{0}")]
    Numeric(String),

    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Numeric(_) => 3,
            CliError::Io(_) => 4,
        }
    }

    pub fn io(path: &std::path::Path, e: std::io::Error) -> Self {
        CliError::Io(format!("{}: {e}", path.display()))
    }
}

fn is_numeric(e: &Error) -> bool {
    match e {
        Error::Stage { source, .. } => is_numeric(source),
        Error::ResonantCoupling(_)
        | Error::ResonantTermination(_)
        | Error::Numeric(_)
        | Error::DegenerateColumn(_)
        | Error::MetricUndefined
        | Error::GradientUndefined
        | Error::NotDiagonalizable(_)
        | Error::SweepFailed
        | Error::FitInfeasible(_)
        | Error::Singularity(_)
        | Error::Domain(_) => true,
        _ => false,
    }
}

fn is_io(e: &Error) -> bool {
    match e {
        Error::Stage { source, .. } => is_io(source),
        Error::Io { .. } => true,
        _ => false,
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let msg = e.to_string();
        if is_io(&e) {
            CliError::Io(msg)
        } else if is_numeric(&e) {
            CliError::Numeric(msg)
        } else {
            CliError::Validation(msg)
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
