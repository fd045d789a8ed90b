use nhse_core::perturb::PerturbError;
use nhse_core::sweep::{SweepError, ThresholdError};
use nhse_core::{BasisError, EigError, ModelError};

/// Failures of a CLI run, each with a stable exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("capacity exceeded: {0}")]
    Capacity(String),
    #[error("solver failure: {0}")]
    Solver(String),
    #[error("selection is empty: {0}")]
    EmptySelection(String),
}

impl CliError {
    /// 1 I/O, 2 configuration, 3 capacity, 4 solver, 5 empty selection.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io(_) => 1,
            CliError::Config(_) => 2,
            CliError::Capacity(_) => 3,
            CliError::Solver(_) => 4,
            CliError::EmptySelection(_) => 5,
        }
    }
}

impl From<BasisError> for CliError {
    fn from(e: BasisError) -> Self {
        match e {
            BasisError::Capacity { .. } => CliError::Capacity(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::Basis(b) => b.into(),
            _ => CliError::Config(e.to_string()),
        }
    }
}

impl From<EigError> for CliError {
    fn from(e: EigError) -> Self {
        match e {
            EigError::Capacity { .. } => CliError::Capacity(e.to_string()),
            EigError::InvalidTolerance => CliError::Config(e.to_string()),
            _ => CliError::Solver(e.to_string()),
        }
    }
}

impl From<SweepError> for CliError {
    fn from(e: SweepError) -> Self {
        match e {
            SweepError::Basis(b) => b.into(),
            SweepError::Model(m) => m.into(),
            SweepError::Eig(x) => x.into(),
            SweepError::InvalidSpec(_) | SweepError::Observable(_) => CliError::Config(e.to_string()),
        }
    }
}

impl From<ThresholdError> for CliError {
    fn from(e: ThresholdError) -> Self {
        match e {
            ThresholdError::Sweep(s) => s.into(),
            ThresholdError::NothingSelected(_) => CliError::EmptySelection(e.to_string()),
            ThresholdError::BracketInvalid { .. } | ThresholdError::BadArguments => CliError::Config(e.to_string()),
        }
    }
}

impl From<PerturbError> for CliError {
    fn from(e: PerturbError) -> Self {
        match e {
            PerturbError::Basis(b) => b.into(),
            PerturbError::Model(m) => m.into(),
            PerturbError::Eig(x) => x.into(),
            PerturbError::BoundClusterNotIsolated { .. } => CliError::Solver(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}
