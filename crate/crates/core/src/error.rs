use thiserror::Error;

pub type Result<T, E = DebondError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum DebondError {
    /// Input rejected by validation. `pointer` is a JSON pointer into the problem file.
    #[error("invalid input at {pointer}: {message}")]
    Validation { pointer: String, message: String },

    #[error("{what} = {value} outside [{lo}, {hi}]")]
    OutOfRange {
        what: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("phi_kappa is not strictly increasing; inverse undefined")]
    Monotonicity,

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("omega iterate left its domain at depth {depth}")]
    IterationDepth { depth: usize },

    #[error("front known up to t = {have}, but t = {need} is required")]
    InsufficientFront { need: f64, have: f64 },

    #[error("invariant violated: {0}")]
    InvariantViolation(String),

    #[error("Picard iteration did not contract after {iterations} sweeps (increment {increment:e}); try a smaller ds")]
    ContractionFailure { iterations: usize, increment: f64 },

    #[error("CFL condition violated: dt = {dt} > eps*dx = {limit}")]
    Cfl { dt: f64, limit: f64 },

    #[error("front reached the toughness domain cap x_max = {x_max}")]
    FrontCap { x_max: f64 },

    #[error("missing data: {0}")]
    MissingData(String),

    #[error("not applicable: {0}")]
    NotApplicable(String),

    #[error("sweep entry eps = {epsilon} failed: {source}")]
    SweepFailure {
        epsilon: f64,
        #[source]
        source: Box<DebondError>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl DebondError {
    pub fn validation(pointer: impl Into<String>, message: impl Into<String>) -> Self {
        DebondError::Validation {
            pointer: pointer.into(),
            message: message.into(),
        }
    }

    /// True for errors caused by bad input rather than numerical trouble.
    pub fn is_validation(&self) -> bool {
        if let DebondError::SweepFailure { source, .. } = self {
            return source.is_validation();
        }
        matches!(
            self,
            DebondError::Validation { .. } | DebondError::Precondition(_) | DebondError::Cfl { .. }
        )
    }

    /// Short machine-readable tag used in JSON error objects.
    pub fn kind(&self) -> &'static str {
        match self {
            DebondError::Validation { .. } => "validation",
            DebondError::OutOfRange { .. } => "out_of_range",
            DebondError::Monotonicity => "monotonicity",
            DebondError::Precondition(_) => "precondition",
            DebondError::IterationDepth { .. } => "iteration_depth",
            DebondError::InsufficientFront { .. } => "insufficient_front",
            DebondError::InvariantViolation(_) => "invariant_violation",
            DebondError::ContractionFailure { .. } => "contraction_failure",
            DebondError::Cfl { .. } => "cfl",
            DebondError::FrontCap { .. } => "front_cap",
            DebondError::MissingData(_) => "missing_data",
            DebondError::NotApplicable(_) => "not_applicable",
            DebondError::SweepFailure { .. } => "sweep_failure",
            DebondError::Io(_) => "io",
            DebondError::Csv(_) => "csv",
        }
    }
}
