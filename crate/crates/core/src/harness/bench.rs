use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use crate::env::{Env, Environment};
use crate::error::{Error, Result};
use crate::planner::{initial_trajectory, Planner};

/// Wall-time statistics of repeated plan steps from the env's initial state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub env: String,
    pub samples: usize,
    pub iterations: usize,
    pub horizon_steps: usize,
    pub node_count: usize,
    pub workers: usize,
    pub repetitions: usize,
    pub median_ms: f64,
    pub mean_ms: f64,
    pub min_ms: f64,
    pub max_ms: f64,
}

pub fn bench(config: &ExperimentConfig, repetitions: usize) -> Result<BenchReport> {
    if repetitions == 0 {
        return Err(Error::Config("bench needs at least one repetition".into()));
    }
    config.validate()?;
    let env = Env::from_spec(config.env.clone())?;
    let planner = Planner::new(config.planner.clone(), config.cost.clone(), &config.env)?;
    let state = env.initial_state();
    let mut warm = initial_trajectory(&config.env, &config.planner)?;
    // One untimed plan to warm caches and the thread pool.
    warm = planner.plan_step(&env, &state, &warm, 0)?.trajectory;
    let mut times = Vec::with_capacity(repetitions);
    for rep in 0..repetitions {
        let out = planner.plan_step(&env, &state, &warm, rep as u64 + 1)?;
        times.push(out.diagnostics.wall_time_ms);
    }
    times.sort_by(f64::total_cmp);
    let mid = times.len() / 2;
    let median_ms = if times.len() % 2 == 1 { times[mid] } else { 0.5 * (times[mid - 1] + times[mid]) };
    let p = &config.planner;
    Ok(BenchReport {
        env: config.env.name.clone(),
        samples: p.samples,
        iterations: p.iterations,
        horizon_steps: p.horizon_steps,
        node_count: p.node_count,
        workers: if p.workers == 0 { rayon::current_num_threads() } else { p.workers },
        repetitions,
        median_ms,
        mean_ms: times.iter().sum::<f64>() / times.len() as f64,
        min_ms: times[0],
        max_ms: times[times.len() - 1],
    })
}
