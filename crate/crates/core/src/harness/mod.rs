//! Experiment orchestration: configs, ensembles, reports and the CLI.

pub mod cli;
mod config;
mod ensemble;
mod experiments;
mod pool;

pub use config::{
    ExperimentConfig, ExperimentKind, ExperimentReport, OperatorSpec, ReportSummary, TrialInputs,
    TrialRow, CODE_VERSION, CSV_HEADER, DEFAULT_CAPS,
};
pub use ensemble::{run_variation_ensemble, spectral_envelope, trial_value};
pub use experiments::{
    constant_curve, constant_table, dilation_check, divergence_closed_form, divergence_demo,
    geometric_up_to, random_increasing_seq, roj_check, write_curve_csv, write_divergence_csv,
    CurveRow, DilationBatch, DivergenceRow, SQUARE_VARIATION_BOUND,
};
pub use pool::{with_workers, worker_count, WORKERS_ENV};
