//! Experiment driver: cross-validation, trials and CSV reports.

mod config;
mod cv;
mod report;
mod solve;
mod trial;

pub use config::{derive_seed, trial_seed, ExperimentConfig, Modality};
pub use cv::{
    cross_validate, fold_score, joint_candidates, make_folds, radius_candidates, theta_candidates,
    CvOutcome, Fold,
};
pub use report::{
    mean_of, read_trials_csv, summarize, win_rate, write_summary_csv, write_trials_csv, SummaryRow,
};
pub use solve::solve_model;
pub use trial::{run_experiment, run_trial, trial_data, ModelOutcome, TrialData, Tuner};
