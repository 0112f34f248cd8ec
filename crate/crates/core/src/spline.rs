//! Spline parameterizations of joint-space target trajectories.
//!
//! The primary representation is a dual-space cubic Hermite spline: every node
//! carries a joint position and a joint velocity, and the interpolant matches
//! both exactly at node times. Natural cubic and C1 quadratic splines through
//! the node positions are provided as position-only baselines.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::trajectory::DenseTrajectory;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplineKind {
    HermiteCubic,
    /// Natural cubic spline through node positions; node velocities are ignored.
    Cubic,
    /// C1 piecewise quadratic through node positions, built left to right.
    Quadratic,
}

impl SplineKind {
    pub const ALL: [SplineKind; 3] = [SplineKind::HermiteCubic, SplineKind::Cubic, SplineKind::Quadratic];

    /// Whether node velocities take part in interpolation.
    pub fn uses_node_velocity(self) -> bool {
        matches!(self, SplineKind::HermiteCubic)
    }
}

impl fmt::Display for SplineKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SplineKind::HermiteCubic => "hermite",
            SplineKind::Cubic => "cubic",
            SplineKind::Quadratic => "quadratic",
        })
    }
}

impl FromStr for SplineKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "hermite" | "hermite_cubic" | "hermitecubic" => Ok(SplineKind::HermiteCubic),
            "cubic" => Ok(SplineKind::Cubic),
            "quadratic" => Ok(SplineKind::Quadratic),
            other => Err(Error::Config(format!("unknown spline kind '{other}'"))),
        }
    }
}

/// Cubic Hermite basis `(h00, h10, h01, h11)` and derivatives with respect to `s`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HermiteBasis {
    pub values: [f64; 4],
    pub derivatives: [f64; 4],
}

pub fn hermite_basis(s: f64) -> Result<HermiteBasis> {
    if !(0.0..=1.0).contains(&s) {
        return Err(Error::Domain(format!("segment parameter {s} outside [0, 1]")));
    }
    Ok(hermite_basis_unchecked(s))
}

#[inline]
fn hermite_basis_unchecked(s: f64) -> HermiteBasis {
    let s2 = s * s;
    let s3 = s2 * s;
    HermiteBasis {
        values: [
            2.0 * s3 - 3.0 * s2 + 1.0,
            s3 - 2.0 * s2 + s,
            -2.0 * s3 + 3.0 * s2,
            s3 - s2,
        ],
        derivatives: [
            6.0 * s2 - 6.0 * s,
            3.0 * s2 - 4.0 * s + 1.0,
            -6.0 * s2 + 6.0 * s,
            3.0 * s2 - 2.0 * s,
        ],
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplineNode {
    pub time: f64,
    pub position: Vec<f64>,
    pub velocity: Vec<f64>,
}

impl SplineNode {
    pub fn new(time: f64, position: Vec<f64>, velocity: Vec<f64>) -> Result<Self> {
        check_dim(position.len(), velocity.len(), "spline node position/velocity")?;
        Ok(Self {
            time,
            position,
            velocity,
        })
    }

    pub fn dof(&self) -> usize {
        self.position.len()
    }
}

/// Per-joint position limits `[lower, upper]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JointBounds {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl JointBounds {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        check_dim(lower.len(), upper.len(), "joint bounds")?;
        if let Some(j) = (0..lower.len()).find(|&j| !(lower[j] < upper[j])) {
            return Err(Error::Config(format!(
                "joint {j}: lower bound {} not below upper bound {}",
                lower[j], upper[j]
            )));
        }
        Ok(Self { lower, upper })
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn dof(&self) -> usize {
        self.lower.len()
    }

    pub fn contains(&self, q: &[f64]) -> bool {
        q.len() == self.dof() && q.iter().enumerate().all(|(j, &x)| self.lower[j] <= x && x <= self.upper[j])
    }

    pub fn clip(&self, q: &mut [f64]) {
        for (j, x) in q.iter_mut().enumerate() {
            *x = x.clamp(self.lower[j], self.upper[j]);
        }
    }
}

/// Clips node positions into `bounds`, then limits each velocity to
/// `min(upper - q, q - lower) / (node_spacing / 2)` preserving its sign.
pub fn clamp_node_velocity(node: &SplineNode, bounds: &JointBounds, node_spacing: f64) -> Result<SplineNode> {
    let mut out = node.clone();
    clamp_node_velocity_in_place(&mut out, bounds, node_spacing)?;
    Ok(out)
}

pub(crate) fn clamp_node_velocity_in_place(node: &mut SplineNode, bounds: &JointBounds, node_spacing: f64) -> Result<()> {
    if !(node_spacing > 0.0) {
        return Err(Error::Config(format!("node spacing must be positive, got {node_spacing}")));
    }
    check_dim(bounds.dof(), node.dof(), "clamp bounds vs node")?;
    bounds.clip(&mut node.position);
    let half = 0.5 * node_spacing;
    for j in 0..node.dof() {
        let q = node.position[j];
        let limit = (bounds.upper[j] - q).min(q - bounds.lower[j]) / half;
        node.velocity[j] = node.velocity[j].clamp(-limit, limit);
    }
    Ok(())
}

/// A uniformly spaced spline with `K >= 2` nodes.
#[derive(Clone, Debug, PartialEq)]
pub struct SplineTrajectory {
    kind: SplineKind,
    dof: usize,
    spacing: f64,
    nodes: Vec<SplineNode>,
    // Cubic: second derivatives at nodes. Quadratic: first derivatives at nodes.
    // Laid out as [k * dof + j]; empty for Hermite.
    coeffs: Vec<f64>,
}

impl SplineTrajectory {
    pub fn new(nodes: Vec<SplineNode>, kind: SplineKind) -> Result<Self> {
        if nodes.len() < 2 {
            return Err(Error::InvalidTrajectory(format!(
                "spline needs at least 2 nodes, got {}",
                nodes.len()
            )));
        }
        let dof = nodes[0].dof();
        for n in &nodes {
            check_dim(dof, n.dof(), "spline node dof")?;
            check_dim(dof, n.velocity.len(), "spline node velocity dof")?;
        }
        let spacing = nodes[1].time - nodes[0].time;
        if !(spacing > 0.0 && spacing.is_finite()) {
            return Err(Error::InvalidTrajectory("node times must be strictly increasing".into()));
        }
        let tol = 1e-9 * spacing.max(1.0);
        for w in nodes.windows(2) {
            if ((w[1].time - w[0].time) - spacing).abs() > tol {
                return Err(Error::InvalidTrajectory("node times must be uniformly spaced".into()));
            }
        }
        let mut spline = Self {
            kind,
            dof,
            spacing,
            nodes,
            coeffs: Vec::new(),
        };
        spline.coeffs = match kind {
            SplineKind::HermiteCubic => Vec::new(),
            SplineKind::Cubic => spline.natural_second_derivatives(),
            SplineKind::Quadratic => spline.quadratic_slopes(),
        };
        Ok(spline)
    }

    /// Nodes at `start + k * spacing` built from per-node position/velocity rows.
    pub fn uniform(
        start: f64,
        spacing: f64,
        positions: Vec<Vec<f64>>,
        velocities: Vec<Vec<f64>>,
        kind: SplineKind,
    ) -> Result<Self> {
        check_dim(positions.len(), velocities.len(), "node rows")?;
        let nodes = positions
            .into_iter()
            .zip(velocities)
            .enumerate()
            .map(|(k, (q, v))| SplineNode::new(start + k as f64 * spacing, q, v))
            .collect::<Result<Vec<_>>>()?;
        Self::new(nodes, kind)
    }

    pub fn kind(&self) -> SplineKind {
        self.kind
    }

    pub fn dof(&self) -> usize {
        self.dof
    }

    pub fn nodes(&self) -> &[SplineNode] {
        &self.nodes
    }

    pub fn into_nodes(self) -> Vec<SplineNode> {
        self.nodes
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn start_time(&self) -> f64 {
        self.nodes[0].time
    }

    pub fn end_time(&self) -> f64 {
        self.nodes[self.nodes.len() - 1].time
    }

    /// Position and velocity at time `t`.
    pub fn evaluate(&self, t: f64) -> Result<(Vec<f64>, Vec<f64>)> {
        let mut q = vec![0.0; self.dof];
        let mut v = vec![0.0; self.dof];
        self.evaluate_into(t, &mut q, &mut v)?;
        Ok((q, v))
    }

    pub fn evaluate_into(&self, t: f64, position: &mut [f64], velocity: &mut [f64]) -> Result<()> {
        check_dim(self.dof, position.len(), "evaluate position buffer")?;
        check_dim(self.dof, velocity.len(), "evaluate velocity buffer")?;
        let (t0, t1) = (self.start_time(), self.end_time());
        let tol = 1e-9 * (t1 - t0).max(1.0);
        if !(t >= t0 - tol && t <= t1 + tol) {
            return Err(Error::Domain(format!("time {t} outside spline span [{t0}, {t1}]")));
        }
        let segments = self.nodes.len() - 1;
        let x = ((t - t0) / self.spacing).clamp(0.0, segments as f64);
        let k = (x.floor() as usize).min(segments - 1);
        let s = x - k as f64;
        let (a, b) = (&self.nodes[k], &self.nodes[k + 1]);
        let h = self.spacing;
        match self.kind {
            SplineKind::HermiteCubic => {
                let HermiteBasis { values: p, derivatives: d } = hermite_basis_unchecked(s);
                for j in 0..self.dof {
                    let (y0, y1) = (a.position[j], b.position[j]);
                    let (m0, m1) = (a.velocity[j] * h, b.velocity[j] * h);
                    position[j] = p[0] * y0 + p[1] * m0 + p[2] * y1 + p[3] * m1;
                    velocity[j] = (d[0] * y0 + d[1] * m0 + d[2] * y1 + d[3] * m1) / h;
                }
            }
            SplineKind::Cubic => {
                // Standard natural-spline form with local coordinates u = t - t_k, w = t_{k+1} - t.
                let u = s * h;
                let w = h - u;
                for j in 0..self.dof {
                    let (y0, y1) = (a.position[j], b.position[j]);
                    let m0 = self.coeffs[k * self.dof + j];
                    let m1 = self.coeffs[(k + 1) * self.dof + j];
                    position[j] = m0 * w * w * w / (6.0 * h)
                        + m1 * u * u * u / (6.0 * h)
                        + (y0 / h - m0 * h / 6.0) * w
                        + (y1 / h - m1 * h / 6.0) * u;
                    velocity[j] = -m0 * w * w / (2.0 * h) + m1 * u * u / (2.0 * h) - (y0 / h - m0 * h / 6.0)
                        + (y1 / h - m1 * h / 6.0);
                }
            }
            SplineKind::Quadratic => {
                let u = s * h;
                for j in 0..self.dof {
                    let (y0, y1) = (a.position[j], b.position[j]);
                    let d0 = self.coeffs[k * self.dof + j];
                    let c = (y1 - y0 - d0 * h) / (h * h);
                    position[j] = y0 + d0 * u + c * u * u;
                    velocity[j] = d0 + 2.0 * c * u;
                }
            }
        }
        Ok(())
    }

    /// Applies [`clamp_node_velocity`] to every node.
    pub fn clamped(mut self, bounds: &JointBounds) -> Result<Self> {
        let spacing = self.spacing;
        for node in &mut self.nodes {
            clamp_node_velocity_in_place(node, bounds, spacing)?;
        }
        Self::new(self.nodes, self.kind)
    }

    fn natural_second_derivatives(&self) -> Vec<f64> {
        let k = self.nodes.len();
        let d = self.dof;
        let h2 = self.spacing * self.spacing;
        let mut out = vec![0.0; k * d];
        if k < 3 {
            return out;
        }
        // Thomas algorithm on the interior system M[i-1] + 4 M[i] + M[i+1] = rhs[i].
        let n = k - 2;
        let mut c_prime = vec![0.0; n];
        let mut d_prime = vec![0.0; n];
        for j in 0..d {
            for i in 0..n {
                let y = |m: usize| self.nodes[m].position[j];
                let rhs = 6.0 * (y(i + 2) - 2.0 * y(i + 1) + y(i)) / h2;
                let (prev_c, prev_d) = if i == 0 { (0.0, 0.0) } else { (c_prime[i - 1], d_prime[i - 1]) };
                let denom = 4.0 - prev_c;
                c_prime[i] = 1.0 / denom;
                d_prime[i] = (rhs - prev_d) / denom;
            }
            let mut next = 0.0;
            for i in (0..n).rev() {
                let m = d_prime[i] - c_prime[i] * next;
                out[(i + 1) * d + j] = m;
                next = m;
            }
        }
        out
    }

    fn quadratic_slopes(&self) -> Vec<f64> {
        let k = self.nodes.len();
        let d = self.dof;
        let h = self.spacing;
        let mut out = vec![0.0; k * d];
        for j in 0..d {
            let y = |m: usize| self.nodes[m].position[j];
            // Initial slope from the parabola through the first three nodes (or the chord for K = 2).
            out[j] = if k >= 3 {
                (-3.0 * y(0) + 4.0 * y(1) - y(2)) / (2.0 * h)
            } else {
                (y(1) - y(0)) / h
            };
            for m in 0..k - 1 {
                out[(m + 1) * d + j] = 2.0 * (y(m + 1) - y(m)) / h - out[m * d + j];
            }
        }
        out
    }
}

/// `K` node times spread uniformly over a horizon of `horizon_len` rows spaced `dt` apart.
pub fn uniform_node_times(horizon_len: usize, dt: f64, node_count: usize) -> Result<Vec<f64>> {
    if node_count < 2 {
        return Err(Error::Config(format!("need at least 2 spline nodes, got {node_count}")));
    }
    if horizon_len < node_count {
        return Err(Error::Config(format!(
            "horizon of {horizon_len} steps cannot hold {node_count} nodes"
        )));
    }
    let spacing = (horizon_len - 1) as f64 * dt / (node_count - 1) as f64;
    Ok((0..node_count).map(|k| k as f64 * spacing).collect())
}

/// Extracts spline nodes from a dense trajectory at the nearest dense row to each node time
/// (ties go to the earlier row). Node times are relative to the first dense row.
pub fn resample_nodes(dense: &DenseTrajectory, node_times: &[f64], kind: SplineKind) -> Result<SplineTrajectory> {
    if dense.is_empty() {
        return Err(Error::InvalidTrajectory("cannot resample an empty dense trajectory".into()));
    }
    let last = dense.len() - 1;
    let tol = 1e-9 * dense.span().max(1.0);
    let nodes = node_times
        .iter()
        .map(|&t| {
            if !(t >= -tol && t <= dense.span() + tol) {
                return Err(Error::Domain(format!(
                    "node time {t} outside dense span [0, {}]",
                    dense.span()
                )));
            }
            let idx = ((t / dense.dt() - 0.5).ceil().max(0.0) as usize).min(last);
            SplineNode::new(t, dense.position(idx).to_vec(), dense.velocity(idx).to_vec())
        })
        .collect::<Result<Vec<_>>>()?;
    SplineTrajectory::new(nodes, kind)
}
