//! Experiment harness: runs conditions over seeds, evaluates mastery on a
//! fixed test set and writes CSV results.

mod condition;
mod config;
pub mod output;
mod run;

pub use condition::Condition;
pub use config::{ExperimentConfig, Seeds, StudentSpec, TeacherSettings, TestSetSpec};
pub use output::{emit_results, load_results, report, summarize, CurvePoint, SummaryRow};
pub use run::{evaluate, run_condition, run_stage_two, sweep, Checkpoint, RunResult, RunStatus};
