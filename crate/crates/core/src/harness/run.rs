use serde::{Deserialize, Serialize};

use super::config::{DelayMode, ExperimentConfig};
use crate::costs::{running_cost, terminal_cost, CostTerms};
use crate::env::{execute_prefix, Env, EnvState, Environment, StepOutcome};
use crate::error::Result;
use crate::planner::{delay_steps, initial_trajectory, predict_state, shift_trajectory, ExecutorMode, PlanOutput, Planner};
use crate::spline::SplineKind;

/// One executed control step on the plant.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    /// Time at the end of the step.
    pub time: f64,
    pub position: Vec<f64>,
    pub velocity: Vec<f64>,
    pub command_q: Vec<f64>,
    pub command_v: Vec<f64>,
    pub cost: CostTerms,
    pub contacts: Vec<bool>,
    pub normal_forces: Vec<f64>,
    /// Index into [`RunLog::plans`] of the plan cycle during which the step ran.
    pub plan: usize,
}

/// Optimization record of one planning cycle.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanRecord {
    pub step: usize,
    /// Control steps executed while this plan was computed.
    pub delay_steps: usize,
    pub best_cost: Vec<f64>,
    pub improved: bool,
    pub planning_failed: bool,
    pub failed_rollouts: usize,
    /// State the plan started from: the prediction at the end of the delay window
    /// (`None` when planning from the measured state with no delay).
    pub predicted_state: Option<EnvState>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub env: String,
    pub task: String,
    pub spline: SplineKind,
    pub executor: ExecutorMode,
    pub seed: u64,
    pub steps: usize,
    /// Running costs of every executed step plus the terminal cost of the whole run.
    pub total_cost: f64,
    pub success: bool,
    pub max_base_height: f64,
    /// Fraction of planning cycles that never replaced the warm-started trajectory.
    pub improvement_failure_fraction: f64,
    /// Base displacement along x divided by elapsed time.
    pub mean_forward_velocity: f64,
    /// Steps with no contact point touching the ground.
    pub flight_steps: usize,
}

/// Machine-dependent timing, kept apart from the reproducible parts of a log.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RunTiming {
    /// Wall time of every planning cycle (ms).
    pub plan_ms: Vec<f64>,
    pub mean_plan_ms: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunLog {
    pub initial_state: EnvState,
    pub records: Vec<StepRecord>,
    pub plans: Vec<PlanRecord>,
    pub summary: RunSummary,
    pub timing: RunTiming,
}

impl RunLog {
    /// Per-step boolean contact matrix (`steps x contact points`).
    pub fn contact_matrix(&self) -> Vec<Vec<bool>> {
        self.records.iter().map(|r| r.contacts.clone()).collect()
    }

    pub fn base_heights(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.position.get(1).copied().unwrap_or(f64::NAN)).collect()
    }
}

/// Runs the closed loop once per configured seed.
pub fn run(config: &ExperimentConfig) -> Result<Vec<RunLog>> {
    config.validate()?;
    config.seeds.iter().map(|&seed| run_seed(config, seed)).collect()
}

/// One closed-loop run.
///
/// Each cycle predicts where the plant will be after the delay window by
/// simulating the previous best, plans from there with the shifted previous
/// best as warm start, and meanwhile executes that same window of the
/// previous best on the plant. Disturbances only reach the plant.
pub fn run_seed(config: &ExperimentConfig, seed: u64) -> Result<RunLog> {
    config.validate()?;
    let env = Env::from_spec(config.env.clone())?;
    let mut planner_config = config.planner.clone();
    planner_config.seed = seed;
    let planner = Planner::new(planner_config.clone(), config.cost.clone(), &config.env)?;
    let gains = &planner_config.gains;
    let dt = planner_config.control_dt;
    let total = config.total_steps();

    let initial = env.initial_state();
    let mut state = initial.clone();
    let mut best = initial_trajectory(&config.env, &planner_config)?;
    let mut records: Vec<StepRecord> = Vec::with_capacity(total);
    let mut plans: Vec<PlanRecord> = Vec::new();
    let mut failed = false;
    let mut plan_ms: Vec<f64> = Vec::new();
    let mut pending = config.disturbances.clone();
    pending.sort_by(|a, b| a.time.total_cmp(&b.time));

    while records.len() < total && !failed {
        let window = match config.delay {
            DelayMode::Fixed(d) => delay_steps(d, dt)?,
            DelayMode::Measured if plans.is_empty() => 1,
            DelayMode::Measured => ((plan_ms[plan_ms.len() - 1] / 1e3 / dt).floor() as usize).max(1),
        }
        .min(planner_config.horizon_steps - 1)
        .min(total - records.len());
        let cycle = plans.len();

        let (executed, out, predicted) = if window == 0 {
            let out = planner.plan_step(&env, &state, &best, cycle as u64)?;
            (out.trajectory.clone(), out, None)
        } else {
            let predicted = predict_state(&env, &state, &best, window as f64 * dt, gains)?;
            let warm = shift_trajectory(&best, window)?;
            let out = planner.plan_step(&env, &predicted, &warm, cycle as u64)?;
            (best.clone(), out, Some(predicted))
        };
        let steps_now = window.max(1);
        plan_ms.push(out.diagnostics.wall_time_ms);
        plans.push(plan_record(records.len(), window, &out, predicted));

        for h in 0..steps_now {
            for d in take_due(&mut pending, state.time, dt) {
                for (v, dv) in state.velocity.iter_mut().zip(&d.impulse) {
                    *v += dv;
                }
            }
            let outcome = execute_prefix(&env, &state, &executed.shift(h)?, 1, gains)?
                .pop()
                .expect("one step");
            records.push(step_record(&outcome, &executed, h, &config.cost, cycle));
            failed = outcome.failed;
            state = outcome.state;
            if failed || records.len() == total {
                break;
            }
        }
        best = if window == 0 { out.trajectory.shift(1)? } else { out.trajectory };
    }

    let summary = summarize(config, seed, &initial, &state, &records, &plans, failed, &env);
    let mean_plan_ms = if plan_ms.is_empty() { 0.0 } else { plan_ms.iter().sum::<f64>() / plan_ms.len() as f64 };
    Ok(RunLog {
        initial_state: initial,
        records,
        plans,
        summary,
        timing: RunTiming { plan_ms, mean_plan_ms },
    })
}

fn take_due(pending: &mut Vec<super::config::Disturbance>, now: f64, dt: f64) -> Vec<super::config::Disturbance> {
    let split = pending.iter().take_while(|d| d.time < now + dt - 1e-12).count();
    pending.drain(..split).collect()
}

fn plan_record(step: usize, window: usize, out: &PlanOutput, predicted_state: Option<EnvState>) -> PlanRecord {
    let d = &out.diagnostics;
    PlanRecord {
        step,
        delay_steps: window,
        best_cost: d.best_cost.iter().map(|c| if c.is_finite() { *c } else { f64::MAX }).collect(),
        improved: d.improved,
        planning_failed: d.planning_failed,
        failed_rollouts: d.failed_rollouts,
        predicted_state,
    }
}

fn step_record(
    outcome: &StepOutcome,
    executed: &crate::trajectory::DenseTrajectory,
    h: usize,
    cost: &crate::costs::CostSpec,
    plan: usize,
) -> StepRecord {
    StepRecord {
        time: outcome.state.time,
        position: outcome.state.position.clone(),
        velocity: outcome.state.velocity.clone(),
        command_q: executed.position(h).to_vec(),
        command_v: executed.velocity(h).to_vec(),
        cost: running_cost(&outcome.state, &outcome.contacts, cost),
        contacts: outcome.contacts.iter().map(|c| c.in_contact).collect(),
        normal_forces: outcome.contacts.iter().map(|c| c.normal_force).collect(),
        plan,
    }
}

#[allow(clippy::too_many_arguments)]
fn summarize(
    config: &ExperimentConfig,
    seed: u64,
    initial: &EnvState,
    last: &EnvState,
    records: &[StepRecord],
    plans: &[PlanRecord],
    failed: bool,
    env: &Env,
) -> RunSummary {
    let finite_or_zero = |x: f64| if x.is_finite() { x } else { 0.0 };
    let running: f64 = records.iter().map(|r| finite_or_zero(r.cost.total())).sum();
    let terminal = finite_or_zero(terminal_cost(last, initial, &config.cost));
    let elapsed = last.time - initial.time;
    let (x0, heights) = match initial.base_pose() {
        Some(p) => (p.x, records.iter().map(|r| r.position[1]).fold(p.z, f64::max)),
        None => (initial.position[0], f64::NAN),
    };
    let x_end = last.position[0];
    let contact_points = env.contact_count();
    RunSummary {
        env: config.env.name.clone(),
        task: config.task.to_string(),
        spline: config.planner.spline,
        executor: config.planner.executor,
        seed,
        steps: records.len(),
        total_cost: running + terminal,
        success: !failed,
        max_base_height: finite_or_zero(heights),
        improvement_failure_fraction: if plans.is_empty() {
            0.0
        } else {
            plans.iter().filter(|p| !p.improved).count() as f64 / plans.len() as f64
        },
        mean_forward_velocity: if elapsed > 0.0 { finite_or_zero((x_end - x0) / elapsed) } else { 0.0 },
        flight_steps: records
            .iter()
            .filter(|r| contact_points > 0 && r.contacts.iter().all(|c| !c))
            .count(),
    }
}
