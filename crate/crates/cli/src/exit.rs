use std::fmt;

use fcas_core::{AllocationError, PricingError, ScenarioError, UcError};

/// Process exit status.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExitCode {
    Ok = 0,
    /// Invalid scenario, costs file or arguments.
    Validation = 1,
    Infeasible = 2,
    Internal = 3,
    Io = 4,
}

#[derive(Debug)]
pub struct CliError {
    pub code: ExitCode,
    pub message: String,
}

impl CliError {
    pub fn new(code: ExitCode, message: impl Into<String>) -> Self {
        Self { code, message: message.into() }
    }

    pub fn io(path: &std::path::Path, e: impl fmt::Display) -> Self {
        Self::new(ExitCode::Io, format!("{}: {e}", path.display()))
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

impl From<ScenarioError> for CliError {
    fn from(e: ScenarioError) -> Self {
        let code = match e {
            ScenarioError::Io { .. } => ExitCode::Io,
            _ => ExitCode::Validation,
        };
        Self::new(code, e.to_string())
    }
}

impl From<UcError> for CliError {
    fn from(e: UcError) -> Self {
        let code = match e {
            UcError::Infeasible { .. } => ExitCode::Infeasible,
            UcError::Build(_) => ExitCode::Validation,
            _ => ExitCode::Internal,
        };
        Self::new(code, e.to_string())
    }
}

impl From<PricingError> for CliError {
    fn from(e: PricingError) -> Self {
        let code = match &e {
            PricingError::Uc(UcError::Infeasible { .. }) | PricingError::StandAlone { source: UcError::Infeasible { .. }, .. } => {
                ExitCode::Infeasible
            }
            _ => ExitCode::Internal,
        };
        Self::new(code, e.to_string())
    }
}

impl From<AllocationError> for CliError {
    fn from(e: AllocationError) -> Self {
        let code = match e {
            AllocationError::TooManyPlayers { .. } | AllocationError::NegativeCost(_) | AllocationError::Empty => {
                ExitCode::Validation
            }
            AllocationError::Lp(_) => ExitCode::Internal,
        };
        Self::new(code, e.to_string())
    }
}
