//! Dense position/velocity target sequences sampled at the control rate.

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::spline::SplineTrajectory;

/// How velocity targets are filled when a spline is sampled densely.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VelocityTargets {
    /// Use the interpolant's time derivative.
    Derivative,
    /// Zero velocity targets (position-only PD references).
    Zero,
}

/// `H` rows of (position target, velocity target) spaced `dt` apart, stored row-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DenseTrajectory {
    dt: f64,
    dof: usize,
    positions: Vec<f64>,
    velocities: Vec<f64>,
}

impl DenseTrajectory {
    pub fn new(dt: f64, dof: usize, positions: Vec<f64>, velocities: Vec<f64>) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::Config(format!("dense trajectory dt must be positive, got {dt}")));
        }
        if dof == 0 {
            return Err(Error::InvalidTrajectory("zero degrees of freedom".into()));
        }
        check_dim(positions.len(), velocities.len(), "dense position/velocity grids")?;
        if positions.len() % dof != 0 {
            return Err(Error::InvalidTrajectory(format!(
                "grid of {} entries is not a multiple of dof {dof}",
                positions.len()
            )));
        }
        if positions.iter().chain(&velocities).any(|x| !x.is_finite()) {
            return Err(Error::InvalidTrajectory("non-finite dense entry".into()));
        }
        Ok(Self {
            dt,
            dof,
            positions,
            velocities,
        })
    }

    /// Every row equal to `(position, velocity)`.
    pub fn constant(len: usize, dt: f64, position: &[f64], velocity: &[f64]) -> Result<Self> {
        check_dim(position.len(), velocity.len(), "constant trajectory row")?;
        let positions = position.iter().copied().cycle().take(len * position.len()).collect();
        let velocities = velocity.iter().copied().cycle().take(len * velocity.len()).collect();
        Self::new(dt, position.len(), positions, velocities)
    }

    /// Samples `spline` at `h * dt` for `h in 0..len`, relative to the first node time.
    pub fn from_spline(
        spline: &SplineTrajectory,
        len: usize,
        dt: f64,
        velocity_targets: VelocityTargets,
    ) -> Result<Self> {
        let dof = spline.dof();
        let t0 = spline.start_time();
        let mut positions = vec![0.0; len * dof];
        let mut velocities = vec![0.0; len * dof];
        for h in 0..len {
            let row = h * dof..(h + 1) * dof;
            spline.evaluate_into(t0 + h as f64 * dt, &mut positions[row.clone()], &mut velocities[row])?;
        }
        if velocity_targets == VelocityTargets::Zero {
            velocities.iter_mut().for_each(|v| *v = 0.0);
        }
        Self::new(dt, dof, positions, velocities)
    }

    pub fn len(&self) -> usize {
        self.positions.len() / self.dof
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn dof(&self) -> usize {
        self.dof
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Time of the last row relative to the first.
    pub fn span(&self) -> f64 {
        self.len().saturating_sub(1) as f64 * self.dt
    }

    pub fn position(&self, h: usize) -> &[f64] {
        &self.positions[h * self.dof..(h + 1) * self.dof]
    }

    pub fn velocity(&self, h: usize) -> &[f64] {
        &self.velocities[h * self.dof..(h + 1) * self.dof]
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub fn velocities(&self) -> &[f64] {
        &self.velocities
    }

    /// Drops the first `executed` rows and pads the tail with the last row.
    pub fn shift(&self, executed: usize) -> Result<Self> {
        let len = self.len();
        if executed >= len {
            return Err(Error::Domain(format!(
                "cannot shift {executed} steps out of a horizon of {len}"
            )));
        }
        let d = self.dof;
        let mut positions = Vec::with_capacity(self.positions.len());
        let mut velocities = Vec::with_capacity(self.velocities.len());
        for h in 0..len {
            let src = (h + executed).min(len - 1);
            positions.extend_from_slice(&self.positions[src * d..(src + 1) * d]);
            velocities.extend_from_slice(&self.velocities[src * d..(src + 1) * d]);
        }
        Ok(Self {
            dt: self.dt,
            dof: d,
            positions,
            velocities,
        })
    }

    /// Elementwise `sum_n w_n * traj_n` over both grids.
    pub fn weighted_sum<'a, I>(items: I) -> Result<Self>
    where
        I: IntoIterator<Item = (&'a DenseTrajectory, f64)>,
    {
        let mut iter = items.into_iter().peekable();
        let first = iter
            .peek()
            .map(|(t, _)| *t)
            .ok_or_else(|| Error::InvalidTrajectory("weighted sum of no trajectories".into()))?;
        let (dt, dof, n) = (first.dt, first.dof, first.positions.len());
        let mut positions = vec![0.0; n];
        let mut velocities = vec![0.0; n];
        for (traj, w) in iter {
            check_dim(dof, traj.dof, "candidate dof")?;
            check_dim(n, traj.positions.len(), "candidate horizon")?;
            if w == 0.0 {
                continue;
            }
            for (acc, x) in positions.iter_mut().zip(&traj.positions) {
                *acc += w * x;
            }
            for (acc, x) in velocities.iter_mut().zip(&traj.velocities) {
                *acc += w * x;
            }
        }
        Self::new(dt, dof, positions, velocities)
    }
}
