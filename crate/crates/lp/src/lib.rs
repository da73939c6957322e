//! Linear programming core used by the unit-commitment model.
//!
//! The solver keeps a dense tableau, refreshed from a sparse LU of the basis,
//! which is adequate for the desk-scale instances this workspace targets and
//! makes dual recovery direct.

mod lu;
mod problem;
mod simplex;

pub use problem::{Problem, Row, Sense};
pub use simplex::{Options, Simplex, Solution};

#[derive(Debug, Clone, thiserror::Error)]
pub enum LpError {
    /// `rows` lists the constraints carrying a nonzero multiplier in the
    /// infeasibility certificate.
    #[error("problem is infeasible ({} rows in certificate)", rows.len())]
    Infeasible { rows: Vec<usize> },
    #[error("problem is unbounded")]
    Unbounded { var: Option<usize> },
    #[error("iteration limit {0} reached")]
    IterationLimit(usize),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

/// Solves `problem` from scratch.
pub fn solve(problem: &Problem) -> Result<(Simplex, Solution), LpError> {
    let mut s = Simplex::new(problem, Options::default());
    s.solve()?;
    let sol = s.solution();
    Ok((s, sol))
}
