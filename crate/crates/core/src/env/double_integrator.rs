use super::spec::{EnvSpec, Morphology};
use super::{pd_torque_joint, EnvState, Environment, PdGains, StepOutcome};
use crate::error::{Error, Result};

/// Point masses on a frictionless line, one per actuated coordinate.
///
/// A non-zero `gravity` acts along the negative coordinate direction.
#[derive(Clone, Debug)]
pub struct DoubleIntegrator {
    spec: EnvSpec,
    mass: f64,
}

impl DoubleIntegrator {
    pub fn new(spec: EnvSpec) -> Result<Self> {
        spec.validate()?;
        let Morphology::PointMass { mass } = spec.morphology else {
            return Err(Error::Config(format!("{} is not a point-mass morphology", spec.name)));
        };
        Ok(Self { spec, mass })
    }

    pub fn mechanical_energy(&self, state: &EnvState) -> f64 {
        0.5 * self.mass * state.velocity.iter().map(|v| v * v).sum::<f64>()
    }

    fn integrate(&self, state: &EnvState, mut force: impl FnMut(usize, f64, f64) -> f64, dt: f64) -> StepOutcome {
        let h = dt / self.spec.substeps as f64;
        let mut q = state.position.clone();
        let mut v = state.velocity.clone();
        for _ in 0..self.spec.substeps {
            for j in 0..q.len() {
                v[j] += h * (force(j, q[j], v[j]) / self.mass - self.spec.gravity);
                q[j] += h * v[j];
            }
        }
        let next = EnvState {
            time: state.time + dt,
            base_dof: 0,
            position: q,
            velocity: v,
        };
        let failed = !next.is_finite();
        StepOutcome {
            state: next,
            contacts: Vec::new(),
            failed,
        }
    }
}

impl Environment for DoubleIntegrator {
    fn spec(&self) -> &EnvSpec {
        &self.spec
    }

    fn initial_state(&self) -> EnvState {
        EnvState {
            time: 0.0,
            base_dof: 0,
            position: self.spec.default_posture.clone(),
            velocity: vec![0.0; self.spec.control_dim()],
        }
    }

    fn contact_count(&self) -> usize {
        0
    }

    fn step(&self, state: &EnvState, torque: &[f64], dt: f64) -> StepOutcome {
        let limits = &self.spec.torque_limits;
        self.integrate(state, |j, _, _| torque[j].clamp(-limits[j], limits[j]), dt)
    }

    fn step_pd(&self, state: &EnvState, q_des: &[f64], v_des: &[f64], gains: &PdGains, dt: f64) -> StepOutcome {
        self.integrate(state, |j, q, v| pd_torque_joint(q_des[j], v_des[j], q, v, gains, j), dt)
    }
}
