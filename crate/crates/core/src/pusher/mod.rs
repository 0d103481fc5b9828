//! Characteristic integration: relativistic kick-drift-kick leapfrog
//! against interchangeable field evaluators.

pub mod backend;
pub mod integrate;
pub mod trajectory;

pub use backend::{AnalyticField, FieldEvaluator, FieldMode};
pub use integrate::{
    integrate, monotone_quantity, push, step_count, Accumulators, DiagnosticsPlan, GridConfig, IntegratorConfig,
    RunState,
};
pub use trajectory::{spread_ids, TrajectoryLog, TrajectoryState};
