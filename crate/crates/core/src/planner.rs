//! Reference-free MPPI over dual-space spline nodes.
//!
//! One control step runs `I` iterations. Each iteration extracts `K` nodes
//! from the dense nominal, draws `N - 1` perturbed node sets with annealed
//! noise, interpolates and rolls out every candidate (index 0 is the
//! unperturbed nominal), then replaces the nominal with the softmax-weighted
//! average of the candidates. The lowest-cost candidate ever rolled out during
//! the step is kept as the best trajectory and supplies the executed command.

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::costs::CostSpec;
use crate::env::{execute_prefix, rollout, EnvKind, EnvSpec, EnvState, Environment, PdGains};
use crate::error::{check_dim, Error, Result};
use crate::schedule::NoiseSchedule;
use crate::spline::{resample_nodes, uniform_node_times, JointBounds, SplineKind, SplineTrajectory};
use crate::trajectory::{DenseTrajectory, VelocityTargets};

/// Which trajectory supplies the executed command and the next warm start.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExecutorMode {
    BestTrajectory,
    NominalOnly,
}

impl ExecutorMode {
    pub const ALL: [ExecutorMode; 2] = [ExecutorMode::BestTrajectory, ExecutorMode::NominalOnly];

    pub fn name(self) -> &'static str {
        match self {
            ExecutorMode::BestTrajectory => "best_trajectory",
            ExecutorMode::NominalOnly => "nominal_only",
        }
    }
}

impl std::fmt::Display for ExecutorMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for ExecutorMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown executor mode '{s}'")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlannerConfig {
    /// `H`: dense steps per horizon.
    pub horizon_steps: usize,
    pub control_dt: f64,
    /// `K`: spline nodes per horizon.
    pub node_count: usize,
    /// `I`: sampling iterations per control step.
    pub iterations: usize,
    /// `N`: candidates per iteration, including the nominal.
    pub samples: usize,
    /// Softmax temperature on min-max normalized costs.
    pub temperature: f64,
    pub beta1: f64,
    pub beta2: f64,
    /// Per-joint position noise scale (rad).
    pub scale_q: Vec<f64>,
    /// Per-joint velocity noise scale (rad/s).
    pub scale_v: Vec<f64>,
    pub gains: PdGains,
    pub seed: u64,
    pub spline: SplineKind,
    pub executor: ExecutorMode,
    /// Rollout threads; 0 uses every available core.
    pub workers: usize,
}

impl PlannerConfig {
    /// Defaults for an environment: 0.9 s horizon at 50 Hz, 3 iterations.
    /// Node count, samples and position noise are tuned per built-in env.
    pub fn for_env(env: &EnvSpec) -> Self {
        let n = env.control_dim();
        let (node_count, samples, scale_q) = match env.kind {
            EnvKind::DoubleIntegrator => (4, 30, 0.3),
            EnvKind::PlanarQuadruped => (6, 30, 0.6),
            // The single leg has to balance and time its push-off; finer nodes and more samples help.
            EnvKind::PlanarHopper => (12, 45, 0.6),
        };
        Self {
            horizon_steps: 45,
            control_dt: 0.02,
            node_count,
            iterations: 3,
            samples,
            temperature: 0.1,
            beta1: 1.0,
            beta2: 1.0,
            scale_q: vec![scale_q; n],
            scale_v: vec![3.0; n],
            gains: env.default_gains(),
            seed: 0,
            spline: SplineKind::HermiteCubic,
            executor: ExecutorMode::BestTrajectory,
            workers: 0,
        }
    }

    pub fn validate(&self, env: &EnvSpec) -> Result<()> {
        if self.node_count < 2 || self.horizon_steps < self.node_count {
            return Err(Error::Config(format!(
                "need H >= K >= 2, got H={} K={}",
                self.horizon_steps, self.node_count
            )));
        }
        if self.samples < 2 {
            return Err(Error::Config(format!("need N >= 2 samples, got {}", self.samples)));
        }
        if !(self.temperature > 0.0) {
            return Err(Error::Config(format!("temperature must be positive, got {}", self.temperature)));
        }
        if !(self.control_dt > 0.0 && self.control_dt.is_finite()) {
            return Err(Error::Config(format!("control dt must be positive, got {}", self.control_dt)));
        }
        let n = env.control_dim();
        check_dim(n, self.scale_q.len(), "scale_q")?;
        check_dim(n, self.scale_v.len(), "scale_v")?;
        if self.scale_q.iter().chain(&self.scale_v).any(|s| !(*s >= 0.0) || !s.is_finite()) {
            return Err(Error::Config("noise scales must be finite and non-negative".into()));
        }
        check_dim(n, self.gains.dof(), "PD gains")?;
        PdGains::new(self.gains.kp.clone(), self.gains.kd.clone(), self.gains.torque_limits.clone())?;
        Ok(())
    }
}

/// Softmax weights of min-max normalized costs.
///
/// Equal finite costs give uniform weights. Infinite or NaN costs get weight
/// exactly zero and are ignored by the normalization. Fails with
/// [`Error::PlanningFailure`] when no cost is finite.
pub fn compute_weights(costs: &[f64], temperature: f64) -> Result<Vec<f64>> {
    if !(temperature > 0.0) {
        return Err(Error::Config(format!("temperature must be positive, got {temperature}")));
    }
    let finite = || costs.iter().copied().filter(|c| c.is_finite());
    let lo = finite().fold(f64::INFINITY, f64::min);
    let hi = finite().fold(f64::NEG_INFINITY, f64::max);
    if !lo.is_finite() {
        return Err(Error::PlanningFailure);
    }
    let range = hi - lo;
    let mut weights: Vec<f64> = costs
        .iter()
        .map(|&c| {
            if !c.is_finite() {
                0.0
            } else if range > 0.0 {
                (-((c - lo) / range) / temperature).exp()
            } else {
                1.0
            }
        })
        .collect();
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= total);
    Ok(weights)
}

/// Weighted average of the candidates' position and velocity grids.
pub fn update_nominal(candidates: &[DenseTrajectory], weights: &[f64]) -> Result<DenseTrajectory> {
    check_dim(candidates.len(), weights.len(), "candidate weights")?;
    DenseTrajectory::weighted_sum(candidates.iter().zip(weights.iter().copied()))
}

/// A trajectory together with the cost of its full rollout.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BestTrajectory {
    pub trajectory: DenseTrajectory,
    pub cost: f64,
}

/// Replaces `current` with the cheapest candidate if it is strictly cheaper.
///
/// Ties keep the incumbent; among tied candidates the lowest index wins.
/// Returns whether the incumbent was replaced.
pub fn update_best(current: &mut Option<BestTrajectory>, candidates: &[DenseTrajectory], costs: &[f64]) -> Result<bool> {
    check_dim(candidates.len(), costs.len(), "candidate costs")?;
    let mut pick: Option<usize> = None;
    let mut best = current.as_ref().map_or(f64::INFINITY, |b| b.cost);
    for (n, &c) in costs.iter().enumerate() {
        if c < best {
            best = c;
            pick = Some(n);
        }
    }
    if let Some(n) = pick {
        *current = Some(BestTrajectory {
            trajectory: candidates[n].clone(),
            cost: costs[n],
        });
    }
    Ok(pick.is_some())
}

/// Per-control-step record of the optimization.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PlanDiagnostics {
    /// Best cost after each iteration (non-increasing).
    pub best_cost: Vec<f64>,
    /// Rollout cost of the unperturbed nominal at each iteration.
    pub nominal_cost: Vec<f64>,
    /// The warm-started incumbent was replaced at least once.
    pub improved: bool,
    /// No candidate produced a finite cost; the warm start was returned.
    pub planning_failed: bool,
    pub failed_rollouts: usize,
    pub wall_time_ms: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PlanOutput {
    pub q_des: Vec<f64>,
    pub v_des: Vec<f64>,
    /// Trajectory to execute and warm-start from.
    pub trajectory: DenseTrajectory,
    /// Rollout cost of `trajectory` from the planning state (the best-trajectory
    /// cost; for nominal-only execution this is the best cost seen, not the nominal's).
    pub cost: f64,
    pub diagnostics: PlanDiagnostics,
}

/// Deterministic sampler stream for one (seed, control step, iteration, sample) tuple.
fn sample_rng(seed: u64, step: u64, iteration: usize, sample: usize) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&step.to_le_bytes());
    key[16..24].copy_from_slice(&(iteration as u64).to_le_bytes());
    key[24..].copy_from_slice(&(sample as u64).to_le_bytes());
    ChaCha8Rng::from_seed(key)
}

/// Perturbs every node of `nominal` with std `sigma(i, k) * scale`, then clips
/// positions to the bounds and clamps velocities. Sample 0 is the nominal itself.
#[allow(clippy::too_many_arguments)]
pub fn sample_control_points(
    nominal: &SplineTrajectory,
    schedule: &NoiseSchedule,
    iteration: usize,
    sample: usize,
    seed: u64,
    step: u64,
    scale_q: &[f64],
    scale_v: &[f64],
    bounds: &JointBounds,
) -> Result<SplineTrajectory> {
    if sample == 0 {
        return Ok(nominal.clone());
    }
    check_dim(nominal.nodes().len(), schedule.nodes(), "schedule nodes")?;
    let mut rng = sample_rng(seed, step, iteration, sample);
    let mut positions = Vec::with_capacity(schedule.nodes());
    let mut velocities = Vec::with_capacity(schedule.nodes());
    for (k, node) in nominal.nodes().iter().enumerate() {
        let sigma = schedule.sigma(iteration, k)?;
        let mut draw = |base: &[f64], scale: &[f64]| -> Vec<f64> {
            base.iter()
                .zip(scale)
                .map(|(b, s)| {
                    let xi: f64 = StandardNormal.sample(&mut rng);
                    b + sigma * s * xi
                })
                .collect()
        };
        positions.push(draw(&node.position, scale_q));
        velocities.push(draw(&node.velocity, scale_v));
    }
    SplineTrajectory::uniform(nominal.start_time(), nominal.spacing(), positions, velocities, nominal.kind())?
        .clamped(bounds)
}

/// Number of control steps covered by a planning delay.
pub fn delay_steps(delay: f64, dt: f64) -> Result<usize> {
    if !(delay >= 0.0) || !delay.is_finite() {
        return Err(Error::Config(format!("planning delay must be non-negative, got {delay}")));
    }
    Ok((delay / dt + 1e-9).floor() as usize)
}

/// Simulates the first `floor(delay / dt)` commands of `best` from `state`.
pub fn predict_state<E: Environment + ?Sized>(
    env: &E,
    state: &EnvState,
    best: &DenseTrajectory,
    delay: f64,
    gains: &PdGains,
) -> Result<EnvState> {
    let steps = delay_steps(delay, best.dt())?;
    if steps > best.len() {
        return Err(Error::Domain(format!(
            "planning delay of {steps} steps exceeds the {}-step horizon",
            best.len()
        )));
    }
    let outcomes = execute_prefix(env, state, best, steps, gains)?;
    Ok(outcomes.last().map_or_else(|| state.clone(), |o| o.state.clone()))
}

/// Drops the executed prefix and repeats the final row to keep the horizon length.
pub fn shift_trajectory(best: &DenseTrajectory, executed_steps: usize) -> Result<DenseTrajectory> {
    best.shift(executed_steps)
}

/// Nominal before any planning: default posture, zero velocity.
pub fn initial_trajectory(env: &EnvSpec, config: &PlannerConfig) -> Result<DenseTrajectory> {
    DenseTrajectory::constant(
        config.horizon_steps,
        config.control_dt,
        &env.default_posture,
        &vec![0.0; env.control_dim()],
    )
}

/// Planner state shared across control steps: configuration, cost, cached schedule and thread pool.
pub struct Planner {
    config: PlannerConfig,
    cost: CostSpec,
    bounds: JointBounds,
    schedule: Option<NoiseSchedule>,
    node_times: Vec<f64>,
    pool: rayon::ThreadPool,
}

impl Planner {
    pub fn new(config: PlannerConfig, cost: CostSpec, env: &EnvSpec) -> Result<Self> {
        config.validate(env)?;
        cost.validate(env)?;
        let schedule = if config.iterations > 0 {
            Some(NoiseSchedule::build(config.iterations, config.node_count, config.beta1, config.beta2)?)
        } else {
            None
        };
        let node_times = uniform_node_times(config.horizon_steps, config.control_dt, config.node_count)?;
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.workers)
            .build()
            .map_err(|e| Error::Config(format!("cannot start rollout workers: {e}")))?;
        Ok(Self {
            config,
            cost,
            bounds: env.bounds.clone(),
            schedule,
            node_times,
            pool,
        })
    }

    pub fn config(&self) -> &PlannerConfig {
        &self.config
    }

    pub fn cost_spec(&self) -> &CostSpec {
        &self.cost
    }

    pub fn schedule(&self) -> Option<&NoiseSchedule> {
        self.schedule.as_ref()
    }

    fn velocity_targets(&self) -> VelocityTargets {
        if self.config.spline.uses_node_velocity() {
            VelocityTargets::Derivative
        } else {
            VelocityTargets::Zero
        }
    }

    fn candidate(&self, nominal: &DenseTrajectory, nodes: &SplineTrajectory, i: usize, n: usize, step: u64) -> Result<DenseTrajectory> {
        if n == 0 {
            return Ok(nominal.clone());
        }
        let schedule = self.schedule.as_ref().expect("schedule exists when iterating");
        let c = &self.config;
        let spline = sample_control_points(nodes, schedule, i, n, c.seed, step, &c.scale_q, &c.scale_v, &self.bounds)?;
        DenseTrajectory::from_spline(&spline, c.horizon_steps, c.control_dt, self.velocity_targets())
    }

    /// Runs all iterations from `state`, warm-started at `prev_best` (already
    /// shifted for the planning delay). `step` indexes the control step for RNG streams.
    pub fn plan_step<E: Environment + ?Sized>(
        &self,
        env: &E,
        state: &EnvState,
        prev_best: &DenseTrajectory,
        step: u64,
    ) -> Result<PlanOutput> {
        let started = Instant::now();
        let c = &self.config;
        check_dim(c.horizon_steps, prev_best.len(), "warm-start horizon")?;
        check_dim(env.control_dim(), prev_best.dof(), "warm-start dof")?;
        let mut diagnostics = PlanDiagnostics::default();
        let mut nominal = prev_best.clone();
        let mut best: Option<BestTrajectory> = None;

        for iter in 0..c.iterations {
            let i = c.iterations - iter;
            let nodes = resample_nodes(&nominal, &self.node_times, c.spline)?;
            let results: Vec<Result<(DenseTrajectory, f64)>> = self.pool.install(|| {
                (0..c.samples)
                    .into_par_iter()
                    .map(|n| {
                        let traj = self.candidate(&nominal, &nodes, i, n, step)?;
                        let cost = rollout(env, state, &traj, &c.gains, &self.cost).cost;
                        Ok((traj, cost))
                    })
                    .collect()
            });
            let (candidates, costs): (Vec<_>, Vec<_>) = results.into_iter().collect::<Result<Vec<_>>>()?.into_iter().unzip();
            diagnostics.failed_rollouts += costs.iter().filter(|c| !c.is_finite()).count();
            diagnostics.nominal_cost.push(costs[0]);

            if iter == 0 && costs[0].is_finite() {
                best = Some(BestTrajectory {
                    trajectory: candidates[0].clone(),
                    cost: costs[0],
                });
            }
            diagnostics.improved |= update_best(&mut best, &candidates, &costs)?;
            diagnostics.best_cost.push(best.as_ref().map_or(f64::INFINITY, |b| b.cost));

            match compute_weights(&costs, c.temperature) {
                Ok(weights) => nominal = update_nominal(&candidates, &weights)?,
                Err(Error::PlanningFailure) => {}
                Err(e) => return Err(e),
            }
        }

        let (trajectory, cost) = match (c.executor, best) {
            (_, None) if c.iterations > 0 => {
                diagnostics.planning_failed = true;
                (prev_best.clone(), f64::INFINITY)
            }
            (ExecutorMode::BestTrajectory, Some(b)) => (b.trajectory, b.cost),
            (ExecutorMode::NominalOnly, b) => (nominal, b.map_or(f64::NAN, |b| b.cost)),
            (ExecutorMode::BestTrajectory, None) => (prev_best.clone(), f64::NAN),
        };
        diagnostics.wall_time_ms = started.elapsed().as_secs_f64() * 1e3;
        Ok(PlanOutput {
            q_des: trajectory.position(0).to_vec(),
            v_des: trajectory.velocity(0).to_vec(),
            trajectory,
            cost,
            diagnostics,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::costs::CostWeights;
    use crate::env::Env;
    use proptest::prelude::*;

    #[test]
    fn weight_examples() {
        let w = compute_weights(&[0.0, 1.0], 1.0).unwrap();
        let e = (-1.0f64).exp();
        assert!((w[0] - 1.0 / (1.0 + e)).abs() < 1e-12);
        assert!((w[0] - 0.7311).abs() < 1e-4);
        assert!((w[1] - 0.2689).abs() < 1e-4);
        assert_eq!(compute_weights(&[3.0; 4], 0.1).unwrap(), vec![0.25; 4]);
        let sharp = compute_weights(&[2.0, 1.0, 3.0], 1e-4).unwrap();
        assert_eq!(sharp, vec![0.0, 1.0, 0.0]);
    }

    #[test]
    fn infinite_costs_get_zero_weight() {
        let w = compute_weights(&[1.0, f64::INFINITY, 2.0, f64::NAN], 0.5).unwrap();
        assert_eq!(w[1], 0.0);
        assert_eq!(w[3], 0.0);
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(matches!(compute_weights(&[f64::INFINITY; 3], 0.1), Err(Error::PlanningFailure)));
        assert!(compute_weights(&[1.0, 2.0], 0.0).is_err());
    }

    proptest! {
        #[test]
        fn weights_form_a_monotone_simplex(costs in prop::collection::vec(-1e3f64..1e3, 2..40), lambda in 1e-3f64..10.0) {
            let w = compute_weights(&costs, lambda).unwrap();
            prop_assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            prop_assert!(w.iter().all(|x| *x >= 0.0));
            for a in 0..costs.len() {
                for b in 0..costs.len() {
                    if costs[a] < costs[b] {
                        prop_assert!(w[a] >= w[b]);
                    }
                }
            }
        }
    }

    #[test]
    fn nominal_update_examples() {
        let zero = DenseTrajectory::constant(3, 0.1, &[0.0], &[0.0]).unwrap();
        let four = DenseTrajectory::constant(3, 0.1, &[4.0], &[4.0]).unwrap();
        let mixed = update_nominal(&[zero.clone(), four.clone()], &[0.25, 0.75]).unwrap();
        assert_eq!(mixed, DenseTrajectory::constant(3, 0.1, &[3.0], &[3.0]).unwrap());
        assert_eq!(update_nominal(&[zero.clone(), four.clone()], &[0.0, 1.0]).unwrap(), four);
        assert_eq!(update_nominal(&[four.clone(), four.clone()], &[0.3, 0.7]).unwrap(), four);
        assert!(update_nominal(&[zero], &[0.5, 0.5]).is_err());
    }

    #[test]
    fn best_update_rules() {
        let a = DenseTrajectory::constant(2, 0.1, &[1.0], &[0.0]).unwrap();
        let b = DenseTrajectory::constant(2, 0.1, &[2.0], &[0.0]).unwrap();
        let mut best = Some(BestTrajectory { trajectory: a.clone(), cost: 1.0 });
        assert!(!update_best(&mut best, &[b.clone(), b.clone()], &[2.0, f64::INFINITY]).unwrap());
        assert_eq!(best.as_ref().unwrap().trajectory, a);
        assert!(!update_best(&mut best, &[b.clone()], &[1.0]).unwrap());
        assert_eq!(best.as_ref().unwrap().trajectory, a);
        assert!(update_best(&mut best, &[a.clone(), b.clone()], &[3.0, 0.5]).unwrap());
        assert_eq!(best.as_ref().unwrap().trajectory, b);
        let mut empty = None;
        assert!(!update_best(&mut empty, &[a.clone()], &[f64::INFINITY]).unwrap());
        assert!(empty.is_none());
    }

    fn di_setup(start: f64) -> (Env, EnvState, PlannerConfig, CostSpec) {
        let env = Env::builtin("double_integrator").unwrap();
        let mut s = env.initial_state();
        s.position[0] = start;
        let mut config = PlannerConfig::for_env(env.spec());
        config.horizon_steps = 20;
        config.control_dt = 0.05;
        config.samples = 16;
        config.scale_q = vec![0.5];
        config.scale_v = vec![1.0];
        config.workers = 1;
        let mut cost = CostSpec::zero(env.spec());
        cost.weights = CostWeights {
            posture: 1.0,
            terminal: 1.0,
            ..CostWeights::ZERO
        };
        (env, s, config, cost)
    }

    #[test]
    fn zero_noise_keeps_nominal() {
        let (env, s, _, _) = di_setup(1.0);
        let nominal = SplineTrajectory::uniform(0.0, 0.3, vec![vec![0.1], vec![0.2]], vec![vec![0.0], vec![1.0]], SplineKind::HermiteCubic).unwrap();
        let sched = NoiseSchedule::build(3, 2, 1.0, 1.0).unwrap();
        let out = sample_control_points(&nominal, &sched, 2, 5, 7, 1, &[0.0], &[0.0], &env.spec().bounds).unwrap();
        assert_eq!(out, nominal);
        let moved = sample_control_points(&nominal, &sched, 2, 5, 7, 1, &[0.1], &[0.1], &env.spec().bounds).unwrap();
        assert_ne!(moved, nominal);
        let again = sample_control_points(&nominal, &sched, 2, 5, 7, 1, &[0.1], &[0.1], &env.spec().bounds).unwrap();
        assert_eq!(moved, again);
        drop(s);
    }

    #[test]
    fn double_integrator_converges_to_origin() {
        let (env, mut s, config, cost) = di_setup(1.0);
        let planner = Planner::new(config.clone(), cost, env.spec()).unwrap();
        let mut best = initial_trajectory(env.spec(), &config).unwrap();
        for step in 0..50 {
            let out = planner.plan_step(&env, &s, &best, step).unwrap();
            let bc = &out.diagnostics.best_cost;
            assert!(bc.windows(2).all(|w| w[1] <= w[0]));
            s = env.step_pd(&s, &out.q_des, &out.v_des, &config.gains, config.control_dt).state;
            best = shift_trajectory(&out.trajectory, 1).unwrap();
        }
        assert!(s.position[0].abs() < 0.05, "ended at {}", s.position[0]);
    }

    #[test]
    fn zero_iterations_return_warm_start() {
        let (env, s, mut config, cost) = di_setup(1.0);
        config.iterations = 0;
        let planner = Planner::new(config.clone(), cost, env.spec()).unwrap();
        let warm = DenseTrajectory::constant(20, 0.05, &[0.4], &[0.2]).unwrap();
        let predicted = predict_state(&env, &s, &warm, 0.0, &config.gains).unwrap();
        assert_eq!(predicted, s);
        let out = planner.plan_step(&env, &predicted, &shift_trajectory(&warm, 0).unwrap(), 0).unwrap();
        assert_eq!(out.q_des, vec![0.4]);
        assert_eq!(out.v_des, vec![0.2]);
    }

    #[test]
    fn single_candidate_without_noise_keeps_warm_start() {
        let (env, s, mut config, cost) = di_setup(1.0);
        config.samples = 2;
        config.scale_q = vec![0.0];
        config.scale_v = vec![0.0];
        let planner = Planner::new(config, cost, env.spec()).unwrap();
        let warm = DenseTrajectory::constant(20, 0.05, &[0.4], &[0.0]).unwrap();
        let out = planner.plan_step(&env, &s, &warm, 0).unwrap();
        assert_eq!(out.trajectory, warm);
        assert!(!out.diagnostics.improved);
    }

    #[test]
    fn results_do_not_depend_on_worker_count() {
        let env = Env::builtin("planar_hopper").unwrap();
        let s = env.initial_state();
        let cost = CostSpec::preset(crate::costs::Task::Jumping, env.spec());
        let mut outputs = Vec::new();
        for workers in [1, 3] {
            let mut config = PlannerConfig::for_env(env.spec());
            config.samples = 8;
            config.horizon_steps = 24;
            config.workers = workers;
            let planner = Planner::new(config.clone(), cost.clone(), env.spec()).unwrap();
            let warm = initial_trajectory(env.spec(), &config).unwrap();
            let out = planner.plan_step(&env, &s, &warm, 3).unwrap();
            outputs.push((out.trajectory, out.cost.to_bits(), out.diagnostics.best_cost));
        }
        assert_eq!(outputs[0], outputs[1]);
    }

    #[test]
    fn prediction_rejects_long_delays() {
        let (env, s, config, _) = di_setup(1.0);
        let warm = initial_trajectory(env.spec(), &config).unwrap();
        assert!(predict_state(&env, &s, &warm, 21.0 * 0.05, &config.gains).is_err());
        assert!(predict_state(&env, &s, &warm, -1.0, &config.gains).is_err());
        let one = predict_state(&env, &s, &warm, 0.05, &config.gains).unwrap();
        let direct = env.step_pd(&s, warm.position(0), warm.velocity(0), &config.gains, 0.05).state;
        assert_eq!(one, direct);
    }

    #[test]
    fn config_validation() {
        let env = EnvSpec::planar_quadruped();
        let ok = PlannerConfig::for_env(&env);
        ok.validate(&env).unwrap();
        let mut bad = ok.clone();
        bad.samples = 1;
        assert!(bad.validate(&env).is_err());
        let mut bad = ok.clone();
        bad.node_count = 50;
        assert!(bad.validate(&env).is_err());
        let mut bad = ok.clone();
        bad.scale_q = vec![0.1];
        assert!(bad.validate(&env).is_err());
        let mut bad = ok;
        bad.temperature = 0.0;
        assert!(bad.validate(&env).is_err());
    }
}
