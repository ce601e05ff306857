use thiserror::Error;

/// Errors produced by the synthesis toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("DOF assignment error: {0}")]
    Assignment(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("resonant coupling: coupled system matrix is singular (min pivot ratio {0:.3e})")]
    ResonantCoupling(f64),

    #[error("resonant termination: (Γ_L − Γ) is singular (condition estimate {0:.3e})")]
    ResonantTermination(f64),

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("degenerate excitation column {0} (zero norm after step)")]
    DegenerateColumn(usize),

    #[error("angle (θ={theta}°, φ={phi}°) is not in the sampled grid")]
    MissingSample { theta: f64, phi: f64 },

    #[error("main-beam field is zero; metric undefined")]
    MetricUndefined,

    #[error("gradient undefined: cost is at the zero-main-beam sentinel")]
    GradientUndefined,

    #[error("matrix is not diagonalizable within tolerance: {0}")]
    NotDiagonalizable(String),

    #[error("χ sweep failed: every grid point is singular")]
    SweepFailed,

    #[error("toy-element fit infeasible: modal transformation deviates from a real rotation by {0:.3e}")]
    FitInfeasible(f64),

    #[error("singularity: {0}")]
    Singularity(String),

    #[error("stage {stage}: {source}")]
    Stage {
        stage: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("dataset format error: {0}")]
    Format(String),

    #[error("shape mismatch in '{name}': manifest declares {expected} values, file holds {found}")]
    ShapeMismatch {
        name: String,
        expected: usize,
        found: usize,
    },

    #[error("non-finite value in '{0}'")]
    NonFinite(String),

    #[error("validation failed (pass an override to accept): {}", .0.join("; "))]
    Validation(Vec<String>),

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
