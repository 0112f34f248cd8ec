//! Reference-free running and terminal costs.
//!
//! Running cost per control step:
//!
//! ```text
//! c = w_h |z - z_des(t)| + w_orient (pitch - pitch_des)^2 + w_q |q - q0|^2
//!   + w_c_vel sum_in_contact |v_c|_1 + w_c_force sum_points |f_c - f0|_1
//! ```
//!
//! Terminal cost: `w_H |p(x_H) - (p(x_0) + v_des T)|_1` over base `(x, z)`,
//! where the z target follows the height schedule when one is installed.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::env::{ContactInfo, EnvSpec, EnvState};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CostWeights {
    pub height: f64,
    pub orientation: f64,
    pub posture: f64,
    pub contact_velocity: f64,
    pub contact_force: f64,
    pub terminal: f64,
}

impl CostWeights {
    pub const ZERO: CostWeights = CostWeights {
        height: 0.0,
        orientation: 0.0,
        posture: 0.0,
        contact_velocity: 0.0,
        contact_force: 0.0,
        terminal: 0.0,
    };

    fn validate(&self) -> Result<()> {
        let all = [
            self.height,
            self.orientation,
            self.posture,
            self.contact_velocity,
            self.contact_force,
            self.terminal,
        ];
        if all.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return Err(Error::Config(format!("cost weights must be finite and non-negative: {self:?}")));
        }
        Ok(())
    }
}

/// Piecewise-constant base height target.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HeightSchedule {
    Constant(f64),
    /// `initial` until the first switch time, then each `(time, height)` from its time on.
    Steps { initial: f64, steps: Vec<(f64, f64)> },
}

impl HeightSchedule {
    pub fn at(&self, t: f64) -> f64 {
        match self {
            HeightSchedule::Constant(h) => *h,
            HeightSchedule::Steps { initial, steps } => steps
                .iter()
                .take_while(|(start, _)| *start <= t)
                .last()
                .map_or(*initial, |(_, h)| *h),
        }
    }

    pub fn max_height(&self) -> f64 {
        match self {
            HeightSchedule::Constant(h) => *h,
            HeightSchedule::Steps { initial, steps } => steps.iter().map(|s| s.1).fold(*initial, f64::max),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Walking,
    Standing,
    Jumping,
    Handstand,
    Backflip,
    Bipedal,
}

impl Task {
    pub const ALL: [Task; 6] = [
        Task::Walking,
        Task::Standing,
        Task::Jumping,
        Task::Handstand,
        Task::Backflip,
        Task::Bipedal,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Task::Walking => "walking",
            Task::Standing => "standing",
            Task::Jumping => "jumping",
            Task::Handstand => "handstand",
            Task::Backflip => "backflip",
            Task::Bipedal => "bipedal",
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Task {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Task::ALL
            .into_iter()
            .find(|t| t.name() == s || (s == "backflip_analogue" && *t == Task::Backflip))
            .ok_or_else(|| Error::Config(format!("unknown task preset '{s}'")))
    }
}

/// Reference heights of the jump command on the original platform; the preset rescales them to the env.
pub const JUMP_STAND_HEIGHT: f64 = 0.325;
pub const JUMP_PEAK_HEIGHT: f64 = 0.7;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CostSpec {
    pub weights: CostWeights,
    pub height: HeightSchedule,
    pub pitch_target: f64,
    /// Extra terminal pitch target, weighted by `w_orient`.
    pub terminal_pitch: Option<f64>,
    /// Desired forward base velocity (m/s).
    pub desired_velocity: f64,
    pub default_posture: Vec<f64>,
    /// Nominal normal force per contact point.
    pub nominal_contact_forces: Vec<f64>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CostTerms {
    pub height: f64,
    pub orientation: f64,
    pub posture: f64,
    pub contact_velocity: f64,
    pub contact_force: f64,
    pub terminal: f64,
}

impl CostTerms {
    pub fn total(&self) -> f64 {
        self.height + self.orientation + self.posture + self.contact_velocity + self.contact_force + self.terminal
    }

    pub fn accumulate(&mut self, other: &CostTerms) {
        self.height += other.height;
        self.orientation += other.orientation;
        self.posture += other.posture;
        self.contact_velocity += other.contact_velocity;
        self.contact_force += other.contact_force;
        self.terminal += other.terminal;
    }
}

impl CostSpec {
    /// Every term switched off; targets taken from the env.
    pub fn zero(env: &EnvSpec) -> Self {
        Self {
            weights: CostWeights::ZERO,
            height: HeightSchedule::Constant(env.nominal_base_height()),
            pitch_target: 0.0,
            terminal_pitch: None,
            desired_velocity: 0.0,
            default_posture: env.default_posture.clone(),
            nominal_contact_forces: env.nominal_contact_forces(),
        }
    }

    /// Task preset with its weight row bound to an environment's posture, height and weight.
    pub fn preset(task: Task, env: &EnvSpec) -> Self {
        let stand = env.nominal_base_height();
        let base = Self::zero(env);
        let (weights, walk) = match task {
            Task::Walking | Task::Standing => (
                CostWeights {
                    height: 1e2,
                    orientation: 10.0,
                    posture: 0.0,
                    contact_velocity: 0.5,
                    contact_force: 5e-2,
                    terminal: 2.5e3,
                },
                if task == Task::Walking { 0.5 } else { 0.0 },
            ),
            Task::Jumping | Task::Backflip => (
                CostWeights {
                    height: 1.0,
                    orientation: 0.5,
                    posture: 0.3,
                    contact_velocity: 1.0,
                    contact_force: 5e-4,
                    terminal: 2e3,
                },
                0.0,
            ),
            Task::Handstand => (
                CostWeights {
                    height: 50.0,
                    orientation: 10.0,
                    posture: 0.3,
                    contact_velocity: 1.0,
                    contact_force: 5e-4,
                    terminal: 0.0,
                },
                0.0,
            ),
            Task::Bipedal => (
                CostWeights {
                    height: 10.0,
                    orientation: 1.0,
                    posture: 0.3,
                    contact_velocity: 1.0,
                    contact_force: 5e-4,
                    terminal: 2e2,
                },
                0.5,
            ),
        };
        let mut spec = Self {
            weights,
            desired_velocity: walk,
            ..base
        };
        match task {
            Task::Jumping => spec.height = jump_schedule(stand, 1.0, 0.5),
            Task::Backflip => {
                spec.height = jump_schedule(stand, 1.0, 0.5);
                spec.terminal_pitch = Some(-PI);
            }
            Task::Handstand => spec.pitch_target = PI / 4.0,
            _ => {}
        }
        spec
    }

    pub fn validate(&self, env: &EnvSpec) -> Result<()> {
        self.weights.validate()?;
        crate::error::check_dim(env.control_dim(), self.default_posture.len(), "cost posture reference")?;
        crate::error::check_dim(env.contact_count(), self.nominal_contact_forces.len(), "nominal contact forces")?;
        if !env.bounds.contains(&self.default_posture) {
            return Err(Error::Config("cost posture reference outside joint bounds".into()));
        }
        Ok(())
    }

    /// Applies one `cost.*` override.
    pub fn set(&mut self, key: &str, value: &toml::Value) -> Result<()> {
        let num = || -> Result<f64> {
            value
                .as_float()
                .or_else(|| value.as_integer().map(|i| i as f64))
                .ok_or_else(|| Error::Config(format!("cost.{key} must be a number")))
        };
        match key {
            "w_h" => self.weights.height = num()?,
            "w_orient" => self.weights.orientation = num()?,
            "w_q" => self.weights.posture = num()?,
            "w_c_vel" => self.weights.contact_velocity = num()?,
            "w_c_force" => self.weights.contact_force = num()?,
            "w_H" => self.weights.terminal = num()?,
            "v_des" => self.desired_velocity = num()?,
            "pitch_des" => self.pitch_target = num()?,
            "terminal_pitch" => self.terminal_pitch = Some(num()?),
            "p_des_z" => self.height = HeightSchedule::Constant(num()?),
            other => return Err(Error::Config(format!("unknown cost key 'cost.{other}'"))),
        }
        Ok(())
    }
}

/// Height step from `stand` to the rescaled jump apex for `duration` seconds starting at `start`.
pub fn jump_schedule(stand: f64, start: f64, duration: f64) -> HeightSchedule {
    let peak = stand * JUMP_PEAK_HEIGHT / JUMP_STAND_HEIGHT;
    HeightSchedule::Steps {
        initial: stand,
        steps: vec![(start, peak), (start + duration, stand)],
    }
}

/// Every preset bound to `env`.
pub fn task_presets(env: &EnvSpec) -> Vec<(Task, CostSpec)> {
    Task::ALL.into_iter().map(|t| (t, CostSpec::preset(t, env))).collect()
}

/// Per-term running cost for the state reached at the end of a control step.
pub fn running_cost(state: &EnvState, contacts: &[ContactInfo], spec: &CostSpec) -> CostTerms {
    let w = &spec.weights;
    let mut terms = CostTerms::default();
    if let Some(pose) = state.base_pose() {
        terms.height = w.height * (pose.z - spec.height.at(state.time)).abs();
        let e = pose.pitch - spec.pitch_target;
        terms.orientation = w.orientation * e * e;
    }
    terms.posture = w.posture
        * state
            .joint_positions()
            .iter()
            .zip(&spec.default_posture)
            .map(|(q, q0)| (q - q0) * (q - q0))
            .sum::<f64>();
    terms.contact_velocity = w.contact_velocity
        * contacts
            .iter()
            .filter(|c| c.in_contact)
            .map(|c| c.velocity[0].abs() + c.velocity[1].abs())
            .sum::<f64>();
    terms.contact_force = w.contact_force
        * contacts
            .iter()
            .zip(&spec.nominal_contact_forces)
            .map(|(c, f0)| c.tangential_force.abs() + (c.normal_force - f0).abs())
            .sum::<f64>();
    terms
}

/// Displacement-based terminal cost between the first and last state of a horizon.
pub fn terminal_cost(final_state: &EnvState, start_state: &EnvState, spec: &CostSpec) -> f64 {
    let w = &spec.weights;
    let elapsed = final_state.time - start_state.time;
    match (final_state.base_pose(), start_state.base_pose()) {
        (Some(end), Some(start)) => {
            let x_target = start.x + spec.desired_velocity * elapsed;
            let z_target = match &spec.height {
                HeightSchedule::Constant(_) => start.z,
                schedule => schedule.at(final_state.time),
            };
            let mut cost = w.terminal * ((end.x - x_target).abs() + (end.z - z_target).abs());
            if let Some(pitch) = spec.terminal_pitch {
                cost += w.orientation * (end.pitch - pitch).powi(2);
            }
            cost
        }
        _ => {
            w.terminal
                * final_state
                    .position
                    .iter()
                    .zip(&spec.default_posture)
                    .map(|(q, q0)| (q - q0).abs())
                    .sum::<f64>()
        }
    }
}
