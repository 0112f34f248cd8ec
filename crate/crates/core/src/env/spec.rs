use serde::{Deserialize, Serialize};

use super::contact::ContactParams;
use super::planar;
use super::PdGains;
use crate::error::{check_dim, Error, Result};
use crate::spline::JointBounds;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnvKind {
    DoubleIntegrator,
    PlanarHopper,
    PlanarQuadruped,
}

impl EnvKind {
    pub fn name(self) -> &'static str {
        match self {
            EnvKind::DoubleIntegrator => "double_integrator",
            EnvKind::PlanarHopper => "planar_hopper",
            EnvKind::PlanarQuadruped => "planar_quadruped",
        }
    }
}

/// A uniform rod; its center of mass sits at mid-length.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinkParams {
    pub length: f64,
    pub mass: f64,
    /// Rotational inertia about the center of mass (kg m^2).
    pub inertia: f64,
}

impl LinkParams {
    pub fn rod(length: f64, mass: f64) -> Self {
        Self {
            length,
            mass,
            inertia: mass * length * length / 12.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrunkParams {
    pub mass: f64,
    pub inertia: f64,
    /// Half extents of the trunk box; its corners define base-ground collision.
    pub half_length: f64,
    pub half_height: f64,
}

/// A two-link sagittal leg (hip and knee) attached to the trunk.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LegParams {
    /// Hip position along the trunk's longitudinal axis.
    pub hip_x: f64,
    pub thigh: LinkParams,
    pub calf: LinkParams,
    /// Half length of a flat foot plate at the calf tip (0 for a point foot).
    /// A plate contributes heel and toe contact points and is level in the default posture.
    pub foot_half_length: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Morphology {
    PointMass { mass: f64 },
    Legged { trunk: TrunkParams, legs: Vec<LegParams> },
}

/// Everything needed to build an environment: geometry, inertia, actuation and contact.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnvSpec {
    pub name: String,
    pub kind: EnvKind,
    pub bounds: JointBounds,
    /// Default (standing / rest) joint posture `q0`.
    pub default_posture: Vec<f64>,
    pub kp: Vec<f64>,
    pub kd: Vec<f64>,
    pub torque_limits: Vec<f64>,
    pub morphology: Morphology,
    pub contact: ContactParams,
    pub gravity: f64,
    pub ground_height: f64,
    /// Base heights below this count as a fall.
    pub failure_height: f64,
    /// Simulation substeps per control step.
    pub substeps: usize,
}

impl EnvSpec {
    pub fn builtin(name: &str) -> Result<Self> {
        match name {
            "double_integrator" => Ok(Self::double_integrator()),
            "planar_hopper" => Ok(Self::planar_hopper()),
            "planar_quadruped" => Ok(Self::planar_quadruped()),
            other => Err(Error::Config(format!("unknown environment '{other}'"))),
        }
    }

    pub fn double_integrator() -> Self {
        Self {
            name: "double_integrator".into(),
            kind: EnvKind::DoubleIntegrator,
            bounds: JointBounds::new(vec![-5.0], vec![5.0]).expect("static bounds"),
            default_posture: vec![0.0],
            kp: vec![10.0],
            kd: vec![5.0],
            torque_limits: vec![20.0],
            morphology: Morphology::PointMass { mass: 1.0 },
            contact: ContactParams::default(),
            gravity: 0.0,
            ground_height: 0.0,
            failure_height: f64::NEG_INFINITY,
            substeps: 10,
        }
    }

    /// Single leg with a flat foot under a box trunk; roughly 5 kg and 0.29 m tall in its crouched default posture.
    pub fn planar_hopper() -> Self {
        Self {
            name: "planar_hopper".into(),
            kind: EnvKind::PlanarHopper,
            bounds: JointBounds::new(vec![-1.0, -2.6], vec![2.2, -0.1]).expect("static bounds"),
            default_posture: vec![0.8, -1.5],
            kp: vec![60.0, 60.0],
            kd: vec![2.0, 2.0],
            torque_limits: vec![45.0, 45.0],
            morphology: Morphology::Legged {
                trunk: TrunkParams {
                    mass: 4.0,
                    inertia: 0.05,
                    half_length: 0.15,
                    half_height: 0.04,
                },
                legs: vec![LegParams {
                    hip_x: 0.0,
                    thigh: LinkParams::rod(0.2, 0.8),
                    calf: LinkParams::rod(0.2, 0.25),
                    foot_half_length: 0.15,
                }],
            },
            contact: ContactParams::default(),
            gravity: 9.81,
            ground_height: 0.0,
            failure_height: 0.1,
            substeps: 10,
        }
    }

    /// Sagittal quadruped analogue: front and rear legs each lump a left/right pair.
    pub fn planar_quadruped() -> Self {
        let leg = |hip_x| LegParams {
            hip_x,
            thigh: LinkParams::rod(0.213, 2.0),
            calf: LinkParams::rod(0.213, 0.5),
            foot_half_length: 0.0,
        };
        Self {
            name: "planar_quadruped".into(),
            kind: EnvKind::PlanarQuadruped,
            bounds: JointBounds::new(vec![-0.5, -2.7, -0.5, -2.7], vec![2.0, -0.84, 2.0, -0.84]).expect("static bounds"),
            default_posture: vec![0.8, -1.5, 0.8, -1.5],
            kp: vec![100.0; 4],
            kd: vec![3.0; 4],
            torque_limits: vec![47.0, 90.0, 47.0, 90.0],
            morphology: Morphology::Legged {
                trunk: TrunkParams {
                    mass: 9.0,
                    inertia: 0.12,
                    half_length: 0.24,
                    half_height: 0.05,
                },
                legs: vec![leg(0.19), leg(-0.19)],
            },
            contact: ContactParams::default(),
            gravity: 9.81,
            ground_height: 0.0,
            failure_height: 0.12,
            substeps: 10,
        }
    }

    pub fn control_dim(&self) -> usize {
        self.default_posture.len()
    }

    pub fn base_dof(&self) -> usize {
        match self.morphology {
            Morphology::PointMass { .. } => 0,
            Morphology::Legged { .. } => 3,
        }
    }

    pub fn default_gains(&self) -> PdGains {
        PdGains {
            kp: self.kp.clone(),
            kd: self.kd.clone(),
            torque_limits: self.torque_limits.clone(),
        }
    }

    pub fn total_mass(&self) -> f64 {
        match &self.morphology {
            Morphology::PointMass { mass } => *mass,
            Morphology::Legged { trunk, legs } => {
                trunk.mass + legs.iter().map(|l| l.thigh.mass + l.calf.mass).sum::<f64>()
            }
        }
    }

    pub fn contact_count(&self) -> usize {
        match &self.morphology {
            Morphology::PointMass { .. } => 0,
            Morphology::Legged { legs, .. } => legs
                .iter()
                .map(|l| if l.foot_half_length > 0.0 { 2 } else { 1 })
                .sum(),
        }
    }

    /// `f0`: the weight shared equally by all contact points (normal component).
    pub fn nominal_contact_forces(&self) -> Vec<f64> {
        let n = self.contact_count();
        vec![self.total_mass() * self.gravity / n.max(1) as f64; n]
    }

    /// Base height with the default posture and all contact points resting on the ground.
    pub fn nominal_base_height(&self) -> f64 {
        match &self.morphology {
            Morphology::PointMass { .. } => 0.0,
            Morphology::Legged { .. } => self.ground_height + planar::default_foot_depth(self),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.control_dim();
        check_dim(n, self.bounds.dof(), "env joint bounds")?;
        check_dim(n, self.kp.len(), "env kp")?;
        check_dim(n, self.kd.len(), "env kd")?;
        check_dim(n, self.torque_limits.len(), "env torque limits")?;
        PdGains::new(self.kp.clone(), self.kd.clone(), self.torque_limits.clone())?;
        if !self.bounds.contains(&self.default_posture) {
            return Err(Error::Config("default posture outside joint bounds".into()));
        }
        if self.substeps == 0 {
            return Err(Error::Config("substeps must be at least 1".into()));
        }
        let c = &self.contact;
        if [c.stiffness, c.damping, c.friction, c.tangential_damping].iter().any(|x| !(*x >= 0.0)) {
            return Err(Error::Config("contact parameters must be non-negative".into()));
        }
        match &self.morphology {
            Morphology::PointMass { mass } => {
                if !(*mass > 0.0) {
                    return Err(Error::Config("point mass must be positive".into()));
                }
                if n != 1 || self.kind != EnvKind::DoubleIntegrator {
                    return Err(Error::Config("point-mass morphology has exactly one actuated coordinate".into()));
                }
            }
            Morphology::Legged { trunk, legs } => {
                let expected = match self.kind {
                    EnvKind::PlanarHopper => 1,
                    EnvKind::PlanarQuadruped => 2,
                    EnvKind::DoubleIntegrator => {
                        return Err(Error::Config("double integrator needs a point-mass morphology".into()))
                    }
                };
                if legs.len() != expected {
                    return Err(Error::Config(format!("{} needs {expected} legs", self.kind.name())));
                }
                check_dim(2 * legs.len(), n, "joints per leg")?;
                let positive = [trunk.mass, trunk.inertia, trunk.half_length, trunk.half_height]
                    .into_iter()
                    .chain(legs.iter().flat_map(|l| {
                        [l.thigh.length, l.thigh.mass, l.thigh.inertia, l.calf.length, l.calf.mass, l.calf.inertia]
                    }));
                if positive.into_iter().any(|x| !(x > 0.0)) {
                    return Err(Error::Config("masses, inertias and lengths must be positive".into()));
                }
            }
        }
        Ok(())
    }

    /// Applies a config override such as `trunk_mass = 8.0` or `kp = [40, 40]`.
    ///
    /// Scalar values given for per-joint keys are broadcast to every joint.
    pub fn set(&mut self, key: &str, value: &toml::Value) -> Result<()> {
        let n = self.control_dim();
        let scalar = || as_f64(key, value);
        let vector = || as_vec(key, value, n);
        match key {
            "name" => {}
            "gravity" => self.gravity = scalar()?,
            "ground_height" => self.ground_height = scalar()?,
            "failure_height" => self.failure_height = scalar()?,
            "substeps" => {
                self.substeps = value
                    .as_integer()
                    .filter(|s| *s > 0)
                    .ok_or_else(|| Error::Config(format!("env.{key} must be a positive integer")))?
                    as usize
            }
            "kp" => self.kp = vector()?,
            "kd" => self.kd = vector()?,
            "torque_limits" => self.torque_limits = vector()?,
            "default_posture" => self.default_posture = vector()?,
            "lower" => self.bounds = JointBounds::new(vector()?, self.bounds.upper().to_vec())?,
            "upper" => self.bounds = JointBounds::new(self.bounds.lower().to_vec(), vector()?)?,
            "stiffness" => self.contact.stiffness = scalar()?,
            "damping" => self.contact.damping = scalar()?,
            "friction" => self.contact.friction = scalar()?,
            "tangential_damping" => self.contact.tangential_damping = scalar()?,
            _ => self.set_morphology(key, value)?,
        }
        Ok(())
    }

    fn set_morphology(&mut self, key: &str, value: &toml::Value) -> Result<()> {
        let x = as_f64(key, value)?;
        match (&mut self.morphology, key) {
            (Morphology::PointMass { mass }, "mass") => *mass = x,
            (Morphology::Legged { trunk, .. }, "trunk_mass") => trunk.mass = x,
            (Morphology::Legged { trunk, .. }, "trunk_inertia") => trunk.inertia = x,
            (Morphology::Legged { trunk, .. }, "trunk_half_length") => trunk.half_length = x,
            (Morphology::Legged { trunk, .. }, "trunk_half_height") => trunk.half_height = x,
            (Morphology::Legged { legs, .. }, "thigh_length") => legs.iter_mut().for_each(|l| l.thigh = LinkParams::rod(x, l.thigh.mass)),
            (Morphology::Legged { legs, .. }, "thigh_mass") => legs.iter_mut().for_each(|l| l.thigh = LinkParams::rod(l.thigh.length, x)),
            (Morphology::Legged { legs, .. }, "calf_length") => legs.iter_mut().for_each(|l| l.calf = LinkParams::rod(x, l.calf.mass)),
            (Morphology::Legged { legs, .. }, "calf_mass") => legs.iter_mut().for_each(|l| l.calf = LinkParams::rod(l.calf.length, x)),
            (Morphology::Legged { legs, .. }, "foot_half_length") => legs.iter_mut().for_each(|l| l.foot_half_length = x),
            (Morphology::Legged { legs, .. }, "hip_offset") => {
                if let [front, rear] = legs.as_mut_slice() {
                    front.hip_x = x;
                    rear.hip_x = -x;
                } else {
                    legs[0].hip_x = x;
                }
            }
            _ => return Err(Error::Config(format!("unknown env key '{key}' for {}", self.name))),
        }
        Ok(())
    }
}

pub(crate) fn as_f64(key: &str, value: &toml::Value) -> Result<f64> {
    match value {
        toml::Value::Float(x) => Ok(*x),
        toml::Value::Integer(i) => Ok(*i as f64),
        _ => Err(Error::Config(format!("config key {key} must be a number"))),
    }
}

pub(crate) fn as_vec(key: &str, value: &toml::Value, n: usize) -> Result<Vec<f64>> {
    match value {
        toml::Value::Array(items) => {
            let v = items.iter().map(|x| as_f64(key, x)).collect::<Result<Vec<_>>>()?;
            check_dim(n, v.len(), "per-joint config value")?;
            Ok(v)
        }
        other => Ok(vec![as_f64(key, other)?; n]),
    }
}
