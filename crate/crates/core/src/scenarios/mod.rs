//! Structural scenarios: specification, feasibility, closed forms and data generation.

mod closed_form;
mod feasibility;
mod generate;
mod spec;

pub use closed_form::{closed_form, ClosedFormResult};
pub use feasibility::{feasible_error_variances, FEASIBILITY_MARGIN};
pub use generate::{generate, replication_seed, GeneratedData};
pub use spec::{HeterogeneityWeights, LinearWeights, ScenarioKind, ScenarioSpec, DEFAULT_BETA_W};
