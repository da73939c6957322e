//! Pipeline behind the `fcas` binary: scenario validation, the full
//! clearing/pricing/allocation run with CSV and JSON artifacts, and the
//! stand-alone cost-sharing game.

pub mod exit;
pub mod game;
pub mod report;
pub mod run;

pub use exit::{CliError, ExitCode};
