use thiserror::Error;

#[derive(Debug, Error)]
pub enum LdlError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("scenario mismatch: {0}")]
    ScenarioMismatch(String),

    /// No all-detected mass at this input tuple (1-based in the message).
    #[error("zero all-detected efficiency at input {x:?}")]
    ZeroEfficiency { x: Vec<usize> },

    #[error("observed efficiency {eta} at input {x:?} outside [{lo}, {hi}]")]
    InconsistentEfficiencies { x: Vec<usize>, eta: String, lo: String, hi: String },

    #[error("enumeration of {count} items exceeds the cap of {cap}")]
    SizeOverflow { count: u128, cap: u128 },

    #[error("input correlation is signalling (marginal residual {residual:e})")]
    SignallingInput { residual: f64 },

    #[error("eta_min must be strictly positive")]
    ZeroEtaMin,

    #[error("tau must lie strictly inside (0, 1), got {0}")]
    DegenerateTau(f64),

    #[error("no feasible point of the sliced polytope could be sampled")]
    NoFeasibleSample,

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl LdlError {
    /// Stable machine-readable name, used in structured error output.
    pub fn kind(&self) -> &'static str {
        match self {
            LdlError::InvalidInput(_) => "InvalidInput",
            LdlError::Parse(_) => "Parse",
            LdlError::ScenarioMismatch(_) => "ScenarioMismatch",
            LdlError::ZeroEfficiency { .. } => "ZeroEfficiency",
            LdlError::InconsistentEfficiencies { .. } => "InconsistentEfficiencies",
            LdlError::SizeOverflow { .. } => "SizeOverflow",
            LdlError::SignallingInput { .. } => "SignallingInput",
            LdlError::ZeroEtaMin => "ZeroEtaMin",
            LdlError::DegenerateTau(_) => "DegenerateTau",
            LdlError::NoFeasibleSample => "NoFeasibleSample",
            LdlError::Io(_) => "Io",
        }
    }

    /// Process exit status for the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            LdlError::ZeroEfficiency { .. } | LdlError::InconsistentEfficiencies { .. } => 2,
            LdlError::SizeOverflow { .. } => 3,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, LdlError>;
