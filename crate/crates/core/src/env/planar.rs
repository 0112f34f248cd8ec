//! Floating-base sagittal-plane legged robots.
//!
//! Generalized coordinates are `[x, z, pitch, hip_0, knee_0, hip_1, knee_1, ...]`.
//! All rotations are about the lateral axis with the convention of a 3-D pitch:
//! a positive angle turns the forward axis toward the ground. A link with
//! absolute angle `phi` points along `(-sin phi, -cos phi)`, so zero means
//! straight down.
//!
//! Equations of motion are assembled per substep from body Jacobians
//! (`M qdd + bias = tau + J_c^T f_c`) and integrated with semi-implicit Euler.
//! PD damping and the velocity-proportional contact terms are treated
//! implicitly, which keeps the stiff ground contact stable at `dt / substeps`.

use nalgebra::{SMatrix, SVector};

use super::contact::ContactParams;
use super::spec::{EnvSpec, LegParams, LinkParams, Morphology, TrunkParams};
use super::{pd_torque_joint, ContactInfo, EnvState, Environment, PdGains, StepOutcome};
use crate::error::{Error, Result};

type V2 = [f64; 2];

const MAX_CONTACTS: usize = 4;

#[inline]
fn rot(angle: f64, v: V2) -> V2 {
    let (s, c) = angle.sin_cos();
    [c * v[0] + s * v[1], -s * v[0] + c * v[1]]
}

/// Derivative of a rotated vector with respect to its angle, for unit angular rate.
#[inline]
fn perp(w: V2) -> V2 {
    [w[1], -w[0]]
}

#[inline]
fn add(a: V2, b: V2) -> V2 {
    [a[0] + b[0], a[1] + b[1]]
}

#[inline]
fn sub(a: V2, b: V2) -> V2 {
    [a[0] - b[0], a[1] - b[1]]
}

#[inline]
fn scale(s: f64, a: V2) -> V2 {
    [s * a[0], s * a[1]]
}

#[inline]
fn dot(a: V2, b: V2) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

/// Unit vector along a link with absolute angle `phi`.
#[inline]
fn link_dir(phi: f64) -> V2 {
    let (s, c) = phi.sin_cos();
    [-s, -c]
}

#[derive(Clone, Debug)]
struct Leg {
    hip: V2,
    thigh: LinkParams,
    calf: LinkParams,
    hip_joint: usize,
    knee_joint: usize,
    /// Contact points in the calf frame.
    feet: Vec<V2>,
}

fn foot_points(leg: &LegParams, hip_q0: f64, knee_q0: f64) -> Vec<V2> {
    let tip = [0.0, -leg.calf.length];
    if leg.foot_half_length > 0.0 {
        // Level plate in the default posture: tangent is the world x axis rotated into the calf frame.
        let phi0 = hip_q0 + knee_q0;
        let tangent = [phi0.cos(), phi0.sin()];
        let h = leg.foot_half_length;
        vec![sub(tip, scale(h, tangent)), add(tip, scale(h, tangent))]
    } else {
        vec![tip]
    }
}

/// Depth of the lowest contact point below the base origin at zero pitch in the default posture.
pub(crate) fn default_foot_depth(spec: &EnvSpec) -> f64 {
    let Morphology::Legged { legs, .. } = &spec.morphology else {
        return 0.0;
    };
    let q0 = &spec.default_posture;
    legs.iter()
        .enumerate()
        .flat_map(|(i, leg)| {
            let (qa, qb) = (q0[2 * i], q0[2 * i + 1]);
            let knee = scale(leg.thigh.length, link_dir(qa));
            foot_points(leg, qa, qb)
                .into_iter()
                .map(move |p| -add(knee, rot(qa + qb, p))[1])
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Body Jacobian columns for a point; only the listed pivots contribute joint columns.
#[inline]
fn point_jacobian<const D: usize>(r: V2, base: V2, pivots: &[(usize, V2)]) -> [V2; D] {
    let mut j = [[0.0; 2]; D];
    j[0] = [1.0, 0.0];
    j[1] = [0.0, 1.0];
    j[2] = perp(sub(r, base));
    for &(idx, pivot) in pivots {
        j[idx] = perp(sub(r, pivot));
    }
    j
}

#[derive(Clone, Copy)]
struct ContactEval<const D: usize> {
    jac: [V2; D],
    penetration: f64,
    normal_active: bool,
    tangential_implicit: bool,
    tangential_explicit: f64,
}

impl<const D: usize> Default for ContactEval<D> {
    fn default() -> Self {
        Self {
            jac: [[0.0; 2]; D],
            penetration: 0.0,
            normal_active: false,
            tangential_implicit: false,
            tangential_explicit: 0.0,
        }
    }
}

#[derive(Clone, Copy, Default)]
struct ContactAccum {
    normal: f64,
    tangential: f64,
}

/// Floating-base planar robot with `D = 3 + 2 * legs` generalized coordinates.
#[derive(Clone, Debug)]
pub struct PlanarLegged<const D: usize> {
    spec: EnvSpec,
    trunk: TrunkParams,
    legs: Vec<Leg>,
    contact_count: usize,
}

enum Actuation<'a> {
    Torque(&'a [f64]),
    Pd {
        q_des: &'a [f64],
        v_des: &'a [f64],
        gains: &'a PdGains,
    },
}

impl<const D: usize> PlanarLegged<D> {
    pub fn new(spec: EnvSpec) -> Result<Self> {
        spec.validate()?;
        let Morphology::Legged { trunk, legs } = &spec.morphology else {
            return Err(Error::Config(format!("{} is not a legged morphology", spec.name)));
        };
        if D != 3 + 2 * legs.len() {
            return Err(Error::Config(format!(
                "{} has {} legs but the model is built for {D} coordinates",
                spec.name,
                legs.len()
            )));
        }
        let q0 = &spec.default_posture;
        let legs: Vec<Leg> = legs
            .iter()
            .enumerate()
            .map(|(i, l)| Leg {
                hip: [l.hip_x, 0.0],
                thigh: l.thigh,
                calf: l.calf,
                hip_joint: 3 + 2 * i,
                knee_joint: 4 + 2 * i,
                feet: foot_points(l, q0[2 * i], q0[2 * i + 1]),
            })
            .collect();
        let contact_count: usize = legs.iter().map(|l| l.feet.len()).sum();
        if contact_count > MAX_CONTACTS {
            return Err(Error::Config(format!("at most {MAX_CONTACTS} contact points supported")));
        }
        Ok(Self {
            trunk: *trunk,
            legs,
            contact_count,
            spec,
        })
    }

    fn contact_params(&self) -> &ContactParams {
        &self.spec.contact
    }

    /// Mass matrix and the generalized gravity/velocity-product forces moved to the right-hand side.
    fn assemble(&self, q: &SVector<f64, D>, v: &SVector<f64, D>) -> (SMatrix<f64, D, D>, SVector<f64, D>) {
        let g = self.spec.gravity;
        let mut m = SMatrix::<f64, D, D>::zeros();
        let mut rhs = SVector::<f64, D>::zeros();
        let t = &self.trunk;
        m[(0, 0)] += t.mass;
        m[(1, 1)] += t.mass;
        m[(2, 2)] += t.inertia;
        rhs[1] -= t.mass * g;

        let base = [q[0], q[1]];
        let pitch = q[2];
        let w_base = v[2];
        for leg in &self.legs {
            let (a, b) = (leg.hip_joint, leg.knee_joint);
            let hip = add(base, rot(pitch, leg.hip));
            let phi_thigh = pitch + q[a];
            let phi_calf = phi_thigh + q[b];
            let thigh_dir = link_dir(phi_thigh);
            let calf_dir = link_dir(phi_calf);
            let knee = add(hip, scale(leg.thigh.length, thigh_dir));
            let w_thigh = w_base + v[a];
            let w_calf = w_thigh + v[b];
            let acc_hip = scale(-w_base * w_base, sub(hip, base));
            let acc_knee = add(acc_hip, scale(-w_thigh * w_thigh, sub(knee, hip)));

            let thigh_com = add(hip, scale(0.5 * leg.thigh.length, thigh_dir));
            let bias = add(acc_hip, scale(-w_thigh * w_thigh, sub(thigh_com, hip)));
            let jac = point_jacobian::<D>(thigh_com, base, &[(a, hip)]);
            add_body(&mut m, &mut rhs, &leg.thigh, &jac, &[2, a], bias, g);

            let calf_com = add(knee, scale(0.5 * leg.calf.length, calf_dir));
            let bias = add(acc_knee, scale(-w_calf * w_calf, sub(calf_com, knee)));
            let jac = point_jacobian::<D>(calf_com, base, &[(a, hip), (b, knee)]);
            add_body(&mut m, &mut rhs, &leg.calf, &jac, &[2, a, b], bias, g);
        }
        (m, rhs)
    }

    /// World positions and Jacobians of every contact point.
    fn contact_points(&self, q: &SVector<f64, D>, mut f: impl FnMut(usize, V2, [V2; D])) {
        let base = [q[0], q[1]];
        let pitch = q[2];
        let mut id = 0;
        for leg in &self.legs {
            let (a, b) = (leg.hip_joint, leg.knee_joint);
            let hip = add(base, rot(pitch, leg.hip));
            let phi_thigh = pitch + q[a];
            let phi_calf = phi_thigh + q[b];
            let knee = add(hip, scale(leg.thigh.length, link_dir(phi_thigh)));
            for &local in &leg.feet {
                let r = add(knee, rot(phi_calf, local));
                f(id, r, point_jacobian::<D>(r, base, &[(a, hip), (b, knee)]));
                id += 1;
            }
        }
    }

    fn substep(&self, q: &mut SVector<f64, D>, v: &mut SVector<f64, D>, act: &Actuation, h: f64, acc: &mut [ContactAccum]) -> bool {
        let (mut m, mut rhs) = self.assemble(q, v);
        let cp = *self.contact_params();
        let ground = self.spec.ground_height;

        let mut evals = [ContactEval::<D>::default(); MAX_CONTACTS];
        self.contact_points(q, |id, r, jac| {
            let e = &mut evals[id];
            e.jac = jac;
            e.penetration = ground - r[1];
            e.normal_active = false;
            e.tangential_implicit = false;
            e.tangential_explicit = 0.0;
            if e.penetration <= 0.0 {
                return;
            }
            let (mut vx, mut vz) = (0.0, 0.0);
            for c in 0..D {
                vx += jac[c][0] * v[c];
                vz += jac[c][1] * v[c];
            }
            let normal = cp.stiffness * e.penetration - cp.damping * vz;
            if !(normal > 0.0) {
                return;
            }
            e.normal_active = true;
            // Normal spring explicit, damping implicit in the end-of-substep velocity.
            for r in 0..D {
                rhs[r] += jac[r][1] * normal;
                for c in 0..D {
                    m[(r, c)] += h * cp.damping * jac[r][1] * jac[c][1];
                }
            }
            let cap = cp.friction * normal;
            let viscous = -cp.tangential_damping * vx;
            if viscous.abs() <= cap {
                e.tangential_implicit = true;
                for r in 0..D {
                    rhs[r] += jac[r][0] * viscous;
                    for c in 0..D {
                        m[(r, c)] += h * cp.tangential_damping * jac[r][0] * jac[c][0];
                    }
                }
            } else {
                e.tangential_explicit = viscous.clamp(-cap, cap);
                for r in 0..D {
                    rhs[r] += jac[r][0] * e.tangential_explicit;
                }
            }
        });

        let limits = &self.spec.torque_limits;
        for j in 0..D - 3 {
            let idx = 3 + j;
            match act {
                Actuation::Torque(tau) => rhs[idx] += tau[j].clamp(-limits[j], limits[j]),
                Actuation::Pd { q_des, v_des, gains } => {
                    let raw = gains.kp[j] * (q_des[j] - q[idx]) + gains.kd[j] * (v_des[j] - v[idx]);
                    if raw.abs() <= gains.torque_limits[j] {
                        m[(idx, idx)] += h * gains.kd[j];
                        rhs[idx] += raw;
                    } else {
                        rhs[idx] += pd_torque_joint(q_des[j], v_des[j], q[idx], v[idx], gains, j);
                    }
                }
            }
        }

        let Some(chol) = m.cholesky() else {
            return false;
        };
        let qdd = chol.solve(&rhs);
        *v += qdd * h;
        *q += *v * h;

        for (e, a) in evals.iter().zip(acc.iter_mut()).take(self.contact_count) {
            if !e.normal_active {
                continue;
            }
            let (mut vx, mut vz) = (0.0, 0.0);
            for c in 0..D {
                vx += e.jac[c][0] * v[c];
                vz += e.jac[c][1] * v[c];
            }
            let normal = cp.stiffness * e.penetration - cp.damping * vz;
            a.normal += normal.max(0.0);
            a.tangential += if e.tangential_implicit {
                -cp.tangential_damping * vx
            } else {
                e.tangential_explicit
            };
        }
        true
    }

    fn integrate(&self, state: &EnvState, act: Actuation, dt: f64) -> StepOutcome {
        let mut q = SVector::<f64, D>::from_column_slice(&state.position);
        let mut v = SVector::<f64, D>::from_column_slice(&state.velocity);
        let substeps = self.spec.substeps;
        let h = dt / substeps as f64;
        let mut acc = [ContactAccum::default(); MAX_CONTACTS];
        let mut ok = true;
        for _ in 0..substeps {
            if !self.substep(&mut q, &mut v, &act, h, &mut acc) {
                ok = false;
                break;
            }
        }
        let next = EnvState {
            time: state.time + dt,
            base_dof: 3,
            position: q.as_slice().to_vec(),
            velocity: v.as_slice().to_vec(),
        };
        let mut contacts = Vec::with_capacity(self.contact_count);
        self.contact_points(&q, |id, _, jac| {
            let (mut vx, mut vz) = (0.0, 0.0);
            for c in 0..D {
                vx += jac[c][0] * v[c];
                vz += jac[c][1] * v[c];
            }
            let normal = acc[id].normal / substeps as f64;
            let in_contact = normal > 0.0;
            contacts.push(ContactInfo {
                point_id: id,
                in_contact,
                normal_force: normal,
                tangential_force: if in_contact { acc[id].tangential / substeps as f64 } else { 0.0 },
                velocity: [vx, vz],
            });
        });
        let failed = !ok || !next.is_finite() || self.base_collides(&q);
        StepOutcome {
            state: next,
            contacts,
            failed,
        }
    }

    fn base_collides(&self, q: &SVector<f64, D>) -> bool {
        if q[1] < self.spec.failure_height {
            return true;
        }
        let (hl, hh) = (self.trunk.half_length, self.trunk.half_height);
        [[hl, hh], [hl, -hh], [-hl, hh], [-hl, -hh]]
            .into_iter()
            .any(|corner| q[1] + rot(q[2], corner)[1] < self.spec.ground_height)
    }

    /// Kinetic plus gravitational potential energy.
    pub fn mechanical_energy(&self, state: &EnvState) -> f64 {
        let q = SVector::<f64, D>::from_column_slice(&state.position);
        let v = SVector::<f64, D>::from_column_slice(&state.velocity);
        let zero = SVector::<f64, D>::zeros();
        let (m, _) = self.assemble(&q, &zero);
        let kinetic = 0.5 * v.dot(&(m * v));
        let g = self.spec.gravity;
        let mut potential = self.trunk.mass * g * q[1];
        for leg in &self.legs {
            let hip = add([q[0], q[1]], rot(q[2], leg.hip));
            let phi_thigh = q[2] + q[leg.hip_joint];
            let thigh_dir = link_dir(phi_thigh);
            let knee = add(hip, scale(leg.thigh.length, thigh_dir));
            let thigh_com = add(hip, scale(0.5 * leg.thigh.length, thigh_dir));
            let calf_com = add(knee, scale(0.5 * leg.calf.length, link_dir(phi_thigh + q[leg.knee_joint])));
            potential += g * (leg.thigh.mass * thigh_com[1] + leg.calf.mass * calf_com[1]);
        }
        kinetic + potential
    }

    /// World positions of every contact point.
    pub fn contact_positions(&self, state: &EnvState) -> Vec<[f64; 2]> {
        let q = SVector::<f64, D>::from_column_slice(&state.position);
        let mut out = Vec::with_capacity(self.contact_count);
        self.contact_points(&q, |_, r, _| out.push(r));
        out
    }
}

#[inline]
fn add_body<const D: usize>(
    m: &mut SMatrix<f64, D, D>,
    rhs: &mut SVector<f64, D>,
    link: &LinkParams,
    jac: &[V2; D],
    angular: &[usize],
    bias: V2,
    gravity: f64,
) {
    let weighted_bias = [bias[0], bias[1] + gravity];
    for r in 0..D {
        let jr = jac[r];
        if jr == [0.0, 0.0] {
            continue;
        }
        rhs[r] -= link.mass * dot(jr, weighted_bias);
        for c in r..D {
            let val = link.mass * dot(jr, jac[c]);
            m[(r, c)] += val;
            if c != r {
                m[(c, r)] += val;
            }
        }
    }
    for &r in angular {
        for &c in angular {
            m[(r, c)] += link.inertia;
        }
    }
}

impl<const D: usize> Environment for PlanarLegged<D> {
    fn spec(&self) -> &EnvSpec {
        &self.spec
    }

    /// Default posture at zero pitch with the feet loaded near static equilibrium.
    fn initial_state(&self) -> EnvState {
        let sag = self.spec.total_mass() * self.spec.gravity / (self.contact_count as f64 * self.spec.contact.stiffness);
        let mut position = vec![0.0; D];
        position[1] = self.spec.nominal_base_height() - sag;
        position[3..].copy_from_slice(&self.spec.default_posture);
        EnvState {
            time: 0.0,
            base_dof: 3,
            position,
            velocity: vec![0.0; D],
        }
    }

    fn contact_count(&self) -> usize {
        self.contact_count
    }

    fn step(&self, state: &EnvState, torque: &[f64], dt: f64) -> StepOutcome {
        self.integrate(state, Actuation::Torque(torque), dt)
    }

    fn step_pd(&self, state: &EnvState, q_des: &[f64], v_des: &[f64], gains: &PdGains, dt: f64) -> StepOutcome {
        self.integrate(state, Actuation::Pd { q_des, v_des, gains }, dt)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::Env;

    fn quadruped() -> PlanarLegged<7> {
        PlanarLegged::new(EnvSpec::planar_quadruped()).unwrap()
    }

    /// Independent kinetic energy from finite-differenced body positions.
    fn kinetic_energy_fd(env: &PlanarLegged<7>, state: &EnvState) -> f64 {
        let eps = 1e-7;
        let positions = |s: &EnvState| -> Vec<(f64, f64, V2, f64)> {
            let q = &s.position;
            let t = &env.trunk;
            let mut out = vec![(t.mass, t.inertia, [q[0], q[1]], q[2])];
            for leg in &env.legs {
                let hip = add([q[0], q[1]], rot(q[2], leg.hip));
                let pt = q[2] + q[leg.hip_joint];
                let pc = pt + q[leg.knee_joint];
                let knee = add(hip, scale(leg.thigh.length, link_dir(pt)));
                out.push((leg.thigh.mass, leg.thigh.inertia, add(hip, scale(0.5 * leg.thigh.length, link_dir(pt))), pt));
                out.push((leg.calf.mass, leg.calf.inertia, add(knee, scale(0.5 * leg.calf.length, link_dir(pc))), pc));
            }
            out
        };
        let mut ahead = state.clone();
        for i in 0..7 {
            ahead.position[i] += eps * state.velocity[i];
        }
        positions(state)
            .iter()
            .zip(positions(&ahead))
            .map(|(a, b)| {
                let vel = scale(1.0 / eps, sub(b.2, a.2));
                let w = (b.3 - a.3) / eps;
                0.5 * a.0 * dot(vel, vel) + 0.5 * a.1 * w * w
            })
            .sum()
    }

    #[test]
    fn mass_matrix_matches_finite_difference_kinetic_energy() {
        let env = quadruped();
        let state = EnvState {
            time: 0.0,
            base_dof: 3,
            position: vec![0.1, 0.3, 0.2, 0.9, -1.4, 0.5, -1.1],
            velocity: vec![0.4, -0.2, 1.1, -2.0, 3.0, 0.7, -1.3],
        };
        let mut no_gravity = env.clone();
        no_gravity.spec.gravity = 0.0;
        let ke = no_gravity.mechanical_energy(&state);
        let fd = kinetic_energy_fd(&env, &state);
        assert!((ke - fd).abs() < 1e-5 * fd.max(1.0), "{ke} vs {fd}");
    }

    #[test]
    fn free_fall_energy_is_conserved() {
        let mut spec = EnvSpec::planar_quadruped();
        spec.kd = vec![0.0; 4];
        let env = Env::from_spec(spec).unwrap();
        let mut state = env.initial_state();
        state.position[1] = 5.0;
        state.velocity = vec![0.3, 0.5, 2.0, 3.0, -4.0, -2.0, 5.0];
        let e0 = env.mechanical_energy(&state);
        let dt = 1.0 / 500.0;
        for _ in 0..500 {
            state = env.step(&state, &[0.0; 4], dt).state;
        }
        let e1 = env.mechanical_energy(&state);
        assert!(((e1 - e0) / e0).abs() < 0.01, "drift {} -> {}", e0, e1);
    }

    #[test]
    fn foot_plate_is_level_in_default_posture() {
        let env = PlanarLegged::<5>::new(EnvSpec::planar_hopper()).unwrap();
        let s = env.initial_state();
        let feet = env.contact_positions(&s);
        assert_eq!(feet.len(), 2);
        assert!((feet[0][1] - feet[1][1]).abs() < 1e-12);
        assert!(feet[0][0] < feet[1][0]);
    }

    #[test]
    fn initial_state_starts_on_the_ground() {
        for name in ["planar_hopper", "planar_quadruped"] {
            let env = Env::builtin(name).unwrap();
            let s = env.initial_state();
            let out = env.step_pd(&s, s.joint_positions(), &vec![0.0; env.control_dim()], &env.spec().default_gains(), 0.02);
            assert!(out.contacts.iter().all(|c| c.in_contact), "{name}");
            assert!(!out.failed);
        }
    }
}
