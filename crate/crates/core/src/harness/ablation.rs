use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::run::{run, RunSummary};
use crate::error::Result;
use crate::planner::ExecutorMode;
use crate::spline::SplineKind;

/// Mean and sample standard deviation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    pub std: f64,
}

impl Stat {
    pub fn of(values: &[f64]) -> Option<Stat> {
        if values.is_empty() {
            return None;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = if values.len() > 1 {
            values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        Some(Stat { mean, std: var.sqrt() })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub spline: SplineKind,
    pub executor: ExecutorMode,
    pub successes: usize,
    pub seeds: usize,
    /// Over successful seeds only; `None` when no seed succeeded.
    pub cost: Option<Stat>,
    pub max_height: Option<Stat>,
    /// Mean over all seeds.
    pub improvement_failure_fraction: f64,
    pub runs: Vec<RunSummary>,
}

impl AblationRow {
    /// Mean cost for ordering comparisons; variants without a success rank last.
    pub fn mean_cost_or_inf(&self) -> f64 {
        self.cost.map_or(f64::INFINITY, |s| s.mean)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AblationTable {
    pub task: String,
    pub env: String,
    pub rows: Vec<AblationRow>,
}

impl AblationTable {
    pub fn row(&self, spline: SplineKind, executor: ExecutorMode) -> Option<&AblationRow> {
        self.rows.iter().find(|r| r.spline == spline && r.executor == executor)
    }

    /// Plain-text table: variant, success count, cost and max height as mean +- std.
    pub fn format(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{} on {}", self.task, self.env);
        let _ = writeln!(
            out,
            "{:<10} {:<16} {:>6} {:>22} {:>18} {:>10}",
            "spline", "executor", "succ", "cost", "max height", "no-improve"
        );
        let fmt = |s: Option<Stat>, prec: usize| match s {
            Some(s) => format!("{:.prec$} +- {:.prec$}", s.mean, s.std),
            None => "-".to_string(),
        };
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{:<10} {:<16} {:>6} {:>22} {:>18} {:>9.1}%",
                r.spline.to_string(),
                r.executor.to_string(),
                format!("{}/{}", r.successes, r.seeds),
                fmt(r.cost, 1),
                fmt(r.max_height, 3),
                100.0 * r.improvement_failure_fraction
            );
        }
        out
    }
}

/// Runs `variants` (spline kind x executor) over every seed of `base`.
pub fn run_variants(base: &ExperimentConfig, variants: &[(SplineKind, ExecutorMode)]) -> Result<AblationTable> {
    let mut rows = Vec::with_capacity(variants.len());
    for &(spline, executor) in variants {
        let mut config = base.clone();
        config.planner.spline = spline;
        config.planner.executor = executor;
        let runs: Vec<RunSummary> = run(&config)?.into_iter().map(|log| log.summary).collect();
        let ok: Vec<&RunSummary> = runs.iter().filter(|r| r.success).collect();
        rows.push(AblationRow {
            spline,
            executor,
            successes: ok.len(),
            seeds: runs.len(),
            cost: Stat::of(&ok.iter().map(|r| r.total_cost).collect::<Vec<_>>()),
            max_height: Stat::of(&ok.iter().map(|r| r.max_base_height).collect::<Vec<_>>()),
            improvement_failure_fraction: runs.iter().map(|r| r.improvement_failure_fraction).sum::<f64>()
                / runs.len() as f64,
            runs,
        });
    }
    Ok(AblationTable {
        task: base.task.to_string(),
        env: base.env.name.clone(),
        rows,
    })
}

/// The full cross product of spline kinds and executor modes.
pub fn run_ablation(base: &ExperimentConfig) -> Result<AblationTable> {
    let variants: Vec<_> = SplineKind::ALL
        .into_iter()
        .flat_map(|s| ExecutorMode::ALL.into_iter().map(move |e| (s, e)))
        .collect();
    run_variants(base, &variants)
}
