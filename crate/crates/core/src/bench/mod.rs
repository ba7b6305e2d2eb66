//! Manufactured solutions, refinement studies, scenario configuration and
//! report emission.

pub mod checks;
pub mod config;
pub mod mms;
pub mod scenario;
pub mod study;

pub use checks::{
    calculus_defects, duhamel_discrepancies, CalculusDefects, CheckOutcome, Relation,
};
pub use config::{emit_config, parse_config, ScenarioConfig, Shift, Tolerances};
pub use mms::{mms_generate, Manufactured, MmsFamily, MmsFields};
pub use scenario::{
    check_checkpoint, run_duality, run_scenario, run_semigroup, run_study, ScenarioSetup,
    SolveReport,
};
pub use study::{
    monolithic_space_study, monolithic_time_study, state_error, steady_study, BoundaryClosure,
    ConvergenceRow, ConvergenceTable, RefinementAxis,
};
