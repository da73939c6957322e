//! Frequency-secured market clearing, ancillary-service pricing and
//! cost allocation.

pub mod allocation;
pub mod error;
pub mod pricing;
pub mod scenario;
pub mod template;
pub mod uc;

pub use error::{AllocationError, ConstraintClass, Diagnostic, PricingError, ScenarioError, UcError};
pub use scenario::{load_scenario, write_scenario, Scenario, SystemParams, UnitRef};
pub use template::{gb_template, toy3_scenario, toy_scenario};
