//! Closed-loop experiments: configuration, runs, ablations, benchmarks and export.

mod ablation;
mod bench;
mod config;
mod export;
mod run;

pub use ablation::{run_ablation, run_variants, AblationRow, AblationTable, Stat};
pub use bench::{bench, BenchReport};
pub use config::{DelayMode, Disturbance, ExperimentConfig};
pub use export::{contacts_csv, export, read_log, steps_csv, summary_json};
pub use run::{run, run_seed, PlanRecord, RunLog, RunSummary, RunTiming, StepRecord};
