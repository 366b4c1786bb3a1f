//! Experiment harness: JSON config, seeded multi-repeat orchestration, and
//! CSV artifacts. The `dsls` binary is a thin wrapper over this module.

pub mod config;
pub mod csvout;
pub mod runner;

pub use config::{default_config, load_config, parse_config, ExperimentConfig, Mode};
pub use runner::{
    compare_modes, diagnose_excitation, run_experiment, simulate, solver_trace, CompareOutput,
    CompareRow, ExcitationRow, ExperimentOutput, SummaryRow,
};
