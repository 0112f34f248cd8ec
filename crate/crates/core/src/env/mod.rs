//! Simulated mechanisms driven through joint-space PD targets.
//!
//! Three built-in environments are provided: a 1-DoF double integrator for
//! smoke tests, and two sagittal-plane legged robots (a single-leg hopper and
//! a two-leg quadruped analogue) with a floating base and compliant ground
//! contact.

mod contact;
mod double_integrator;
mod planar;
mod rollout;
mod spec;

use serde::{Deserialize, Serialize};

pub use contact::{contact_force, ContactForce, ContactParams};
pub use double_integrator::DoubleIntegrator;
pub use planar::PlanarLegged;
pub use rollout::{execute_prefix, rollout, RolloutResult};
pub(crate) use spec::{as_f64, as_vec};
pub use spec::{EnvKind, EnvSpec, LegParams, LinkParams, Morphology, TrunkParams};

use crate::error::{Error, Result};

/// Planar base pose. Pitch is the rotation about the lateral axis; positive pitch lowers the nose.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BasePose {
    pub x: f64,
    pub z: f64,
    pub pitch: f64,
}

/// Generalized coordinates of a simulated mechanism.
///
/// `position` and `velocity` start with `base_dof` floating-base entries
/// (`x, z, pitch` for legged envs) followed by the actuated joints.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnvState {
    pub time: f64,
    pub base_dof: usize,
    pub position: Vec<f64>,
    pub velocity: Vec<f64>,
}

impl EnvState {
    pub fn base_pose(&self) -> Option<BasePose> {
        (self.base_dof == 3).then(|| BasePose {
            x: self.position[0],
            z: self.position[1],
            pitch: self.position[2],
        })
    }

    pub fn base_velocity(&self) -> &[f64] {
        &self.velocity[..self.base_dof]
    }

    pub fn joint_positions(&self) -> &[f64] {
        &self.position[self.base_dof..]
    }

    pub fn joint_velocities(&self) -> &[f64] {
        &self.velocity[self.base_dof..]
    }

    pub fn is_finite(&self) -> bool {
        self.time.is_finite() && self.position.iter().chain(&self.velocity).all(|x| x.is_finite())
    }
}

/// Contact state of one contact point, averaged over the simulation substeps of a control step.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContactInfo {
    pub point_id: usize,
    pub in_contact: bool,
    pub normal_force: f64,
    pub tangential_force: f64,
    /// Point velocity `(x, z)` at the end of the step.
    pub velocity: [f64; 2],
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepOutcome {
    pub state: EnvState,
    pub contacts: Vec<ContactInfo>,
    /// Base touched the ground or the state became non-finite.
    pub failed: bool,
}

/// Diagonal PD gains and symmetric torque limits for the actuated joints.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PdGains {
    pub kp: Vec<f64>,
    pub kd: Vec<f64>,
    pub torque_limits: Vec<f64>,
}

impl PdGains {
    pub fn new(kp: Vec<f64>, kd: Vec<f64>, torque_limits: Vec<f64>) -> Result<Self> {
        crate::error::check_dim(kp.len(), kd.len(), "kd gains")?;
        crate::error::check_dim(kp.len(), torque_limits.len(), "torque limits")?;
        if kp.iter().chain(&kd).chain(&torque_limits).any(|g| !(*g >= 0.0)) {
            return Err(Error::Config("PD gains and torque limits must be non-negative".into()));
        }
        Ok(Self { kp, kd, torque_limits })
    }

    pub fn dof(&self) -> usize {
        self.kp.len()
    }
}

/// `u = Kp (q_des - q) + Kd (v_des - v)`, clipped to `+-torque_limits`.
pub fn pd_torque(q_des: &[f64], v_des: &[f64], q: &[f64], v: &[f64], gains: &PdGains) -> Vec<f64> {
    (0..gains.dof())
        .map(|j| pd_torque_joint(q_des[j], v_des[j], q[j], v[j], gains, j))
        .collect()
}

#[inline]
pub(crate) fn pd_torque_joint(q_des: f64, v_des: f64, q: f64, v: f64, gains: &PdGains, j: usize) -> f64 {
    let u = gains.kp[j] * (q_des - q) + gains.kd[j] * (v_des - v);
    let limit = gains.torque_limits[j];
    u.clamp(-limit, limit)
}

/// Dynamics and contact reporting shared by every simulated mechanism.
///
/// Implementations are pure: identical inputs give bit-identical outputs, and
/// only immutable spec data is shared between concurrent rollouts.
pub trait Environment: Send + Sync {
    fn spec(&self) -> &EnvSpec;

    fn initial_state(&self) -> EnvState;

    fn contact_count(&self) -> usize;

    fn control_dim(&self) -> usize {
        self.spec().control_dim()
    }

    /// Integrates one control interval with a constant joint torque.
    fn step(&self, state: &EnvState, torque: &[f64], dt: f64) -> StepOutcome;

    /// Integrates one control interval with the PD law re-evaluated at every substep.
    fn step_pd(&self, state: &EnvState, q_des: &[f64], v_des: &[f64], gains: &PdGains, dt: f64) -> StepOutcome;
}

/// Environment selected at runtime from an [`EnvSpec`].
#[derive(Clone, Debug)]
pub enum Env {
    DoubleIntegrator(DoubleIntegrator),
    Hopper(PlanarLegged<5>),
    Quadruped(PlanarLegged<7>),
}

impl Env {
    pub fn from_spec(spec: EnvSpec) -> Result<Self> {
        spec.validate()?;
        Ok(match spec.kind {
            EnvKind::DoubleIntegrator => Env::DoubleIntegrator(DoubleIntegrator::new(spec)?),
            EnvKind::PlanarHopper => Env::Hopper(PlanarLegged::new(spec)?),
            EnvKind::PlanarQuadruped => Env::Quadruped(PlanarLegged::new(spec)?),
        })
    }

    pub fn builtin(name: &str) -> Result<Self> {
        Self::from_spec(EnvSpec::builtin(name)?)
    }

    /// Total mechanical energy for the legged envs (kinetic plus gravitational).
    pub fn mechanical_energy(&self, state: &EnvState) -> f64 {
        match self {
            Env::DoubleIntegrator(e) => e.mechanical_energy(state),
            Env::Hopper(e) => e.mechanical_energy(state),
            Env::Quadruped(e) => e.mechanical_energy(state),
        }
    }
}

macro_rules! dispatch {
    ($self:ident, $e:ident => $body:expr) => {
        match $self {
            Env::DoubleIntegrator($e) => $body,
            Env::Hopper($e) => $body,
            Env::Quadruped($e) => $body,
        }
    };
}

impl Environment for Env {
    fn spec(&self) -> &EnvSpec {
        dispatch!(self, e => e.spec())
    }

    fn initial_state(&self) -> EnvState {
        dispatch!(self, e => e.initial_state())
    }

    fn contact_count(&self) -> usize {
        dispatch!(self, e => e.contact_count())
    }

    fn step(&self, state: &EnvState, torque: &[f64], dt: f64) -> StepOutcome {
        dispatch!(self, e => e.step(state, torque, dt))
    }

    fn step_pd(&self, state: &EnvState, q_des: &[f64], v_des: &[f64], gains: &PdGains, dt: f64) -> StepOutcome {
        dispatch!(self, e => e.step_pd(state, q_des, v_des, gains, dt))
    }
}
