//! Seeded recovery sweeps over measurement schemes and dimensions.
//!
//! Every trial draws its truth tensor, starting point, noise and operator from
//! seeds derived from the master seed (see [`truth_seed`], [`operator_seed`]),
//! so any single trial can be re-run in isolation and reports do not depend on
//! thread count.

mod config;
mod report;
mod run;

pub use config::{
    parse_config, parse_config_str, parse_pairs, Ensemble, ExperimentSpec, Scheme, Structure, CONFIG_KEYS,
};
pub use report::{parse_csv, read_report_json, to_csv, to_json, write_report, ReportFormat, CSV_HEADER};
pub use run::{
    build_operator, init_seed, noise_seed, operator_seed, plan_cells, run_cell, run_cell_with,
    run_experiment, run_experiment_with_progress, run_trial, truth_seed, Cell, CellRow,
    ExperimentReport, SkippedCell, TrialOutcome,
};
