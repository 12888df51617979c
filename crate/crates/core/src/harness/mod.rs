//! Experiments: Monte Carlo over `s_n(A + B)`, the end-to-end certifier and
//! the per-ingredient experiments.

pub mod component;
pub mod pipeline;
pub mod trials;

pub use component::{component_experiment, ComponentMode, ComponentParams, ComponentSummary};
pub use pipeline::{pipeline_certify, solve_tau0, PipelineOptions, PipelineReport, RegimeReport, RegimeStatus};
pub use trials::{fit_decay, run_trials, summarize, ExperimentConfig, ExperimentSummary, ShiftSource, TrialRecord};
