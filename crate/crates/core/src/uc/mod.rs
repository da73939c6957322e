//! Frequency-secured unit commitment: model, relaxed solve with dual
//! recovery, and branch and bound.

pub mod cone;
pub mod model;
pub mod solution;
pub mod solve;

pub use cone::{nadir_feasible, nadir_min_inertia, rocof_min_inertia};
pub use model::{build_uc, LossRule, RowKind, RowTag, UcModel};
pub use solution::{
    CommitmentSchedule, DispatchSolution, DualSolution, GenDuals, HourDuals, ResDuals, RowDual, SolveStats, StorDuals,
};
pub use solve::{solve_mip, solve_mip_with, solve_relaxed, solve_relaxed_with, with_fixed_binaries, SolveOptions};
