use serde::{Deserialize, Serialize};

/// Compliant ground contact: spring-damper normal force, viscous tangential
/// force capped by Coulomb friction.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContactParams {
    /// Normal stiffness `k_n` (N/m).
    pub stiffness: f64,
    /// Normal damping `c_n` (N s/m).
    pub damping: f64,
    /// Coulomb coefficient `mu`.
    pub friction: f64,
    /// Viscous tangential coefficient (N s/m) below the Coulomb cap.
    pub tangential_damping: f64,
}

impl Default for ContactParams {
    fn default() -> Self {
        Self {
            stiffness: 1e4,
            damping: 1e2,
            friction: 0.8,
            tangential_damping: 2e3,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ContactForce {
    pub normal: f64,
    pub tangential: f64,
}

/// Force on a contact point with `penetration` below the ground and the given
/// point velocity components (normal positive away from the ground).
pub fn contact_force(penetration: f64, normal_velocity: f64, tangential_velocity: f64, params: &ContactParams) -> ContactForce {
    if penetration <= 0.0 {
        return ContactForce::default();
    }
    let normal = (params.stiffness * penetration - params.damping * normal_velocity).max(0.0);
    let cap = params.friction * normal;
    let tangential = (-params.tangential_damping * tangential_velocity).clamp(-cap, cap);
    ContactForce { normal, tangential }
}
