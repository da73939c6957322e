use std::fmt;

use thiserror::Error;

/// One violated scenario invariant, located by field path.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Diagnostic {
    pub path: String,
    pub message: String,
}

impl Diagnostic {
    pub fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            path: path.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed scenario document: {0}")]
    Parse(String),
    #[error("{} validation error(s):\n{}", .0.len(), join(.0))]
    Validation(Vec<Diagnostic>),
}

fn join(d: &[Diagnostic]) -> String {
    d.iter().map(|d| format!("  {d}")).collect::<Vec<_>>().join("\n")
}

/// Constraint families of the clearing model, used in infeasibility reports.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ConstraintClass {
    Balance,
    Thermal,
    Storage,
    Aggregation,
    MaxLoss,
    Rocof,
    Nadir,
    Qss,
    Bounds,
    Integrality,
}

impl fmt::Display for ConstraintClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ConstraintClass::Balance => "energy balance",
            ConstraintClass::Thermal => "thermal unit",
            ConstraintClass::Storage => "storage",
            ConstraintClass::Aggregation => "service aggregation",
            ConstraintClass::MaxLoss => "credible loss",
            ConstraintClass::Rocof => "RoCoF",
            ConstraintClass::Nadir => "frequency nadir",
            ConstraintClass::Qss => "quasi-steady-state",
            ConstraintClass::Bounds => "variable bounds",
            ConstraintClass::Integrality => "integrality",
        })
    }
}

#[derive(Debug, Error)]
pub enum UcError {
    #[error("model build: {0}")]
    Build(String),
    #[error("infeasible; conflicting constraint classes: {}", list(.classes))]
    Infeasible { classes: Vec<ConstraintClass> },
    #[error("unbounded relaxation")]
    Unbounded,
    #[error("solver failure: {0}")]
    Solver(String),
    #[error("{0}")]
    WrongMode(&'static str),
}

fn list(c: &[ConstraintClass]) -> String {
    c.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(", ")
}

#[derive(Debug, Error)]
pub enum PricingError {
    #[error("hour {hour}: stationarity price {which} = {formula} but aggregation dual = {direct}")]
    PriceMismatch {
        hour: usize,
        which: &'static str,
        formula: f64,
        direct: f64,
    },
    #[error("duality identity off by {residual:.3e} (relative {relative:.3e})")]
    AuditMismatch { residual: f64, relative: f64 },
    #[error("stand-alone solve for unit {unit}: {source}")]
    StandAlone {
        unit: String,
        #[source]
        source: UcError,
    },
    #[error(transparent)]
    Uc(#[from] UcError),
}

#[derive(Debug, Error, PartialEq)]
pub enum AllocationError {
    #[error("{players} players exceed the oracle limit of {max}")]
    TooManyPlayers { players: usize, max: usize },
    #[error("empty game")]
    Empty,
    #[error("negative stand-alone cost {0}")]
    NegativeCost(f64),
    #[error("oracle LP failed: {0}")]
    Lp(String),
}
