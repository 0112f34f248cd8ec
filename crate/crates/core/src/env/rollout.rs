use serde::{Deserialize, Serialize};

use super::{EnvState, Environment, PdGains, StepOutcome};
use crate::costs::{running_cost, terminal_cost, CostSpec, CostTerms};
use crate::error::{Error, Result};
use crate::trajectory::DenseTrajectory;

/// Simulated candidate: total cost, visited states and contact history.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RolloutResult {
    /// Sum of `cost_terms`, or `+inf` when the rollout failed.
    pub cost: f64,
    /// Start state followed by the state after each executed step.
    pub states: Vec<EnvState>,
    /// `contact_log[h][c]`: contact point `c` touching the ground during step `h`.
    pub contact_log: Vec<Vec<bool>>,
    /// Terms accumulated up to the end of the horizon or the failing step.
    pub cost_terms: CostTerms,
    pub failed: bool,
}

/// Tracks `dense` with the PD law from `start` and scores it.
///
/// Running costs are evaluated on the state reached after every step; the
/// terminal cost compares the final state with `start`. A failing step ends
/// the rollout with an infinite cost.
pub fn rollout<E: Environment + ?Sized>(
    env: &E,
    start: &EnvState,
    dense: &DenseTrajectory,
    gains: &PdGains,
    cost: &CostSpec,
) -> RolloutResult {
    let mut states = Vec::with_capacity(dense.len() + 1);
    let mut contact_log = Vec::with_capacity(dense.len());
    let mut terms = CostTerms::default();
    states.push(start.clone());
    for h in 0..dense.len() {
        let current = states.last().expect("start state");
        let out = env.step_pd(current, dense.position(h), dense.velocity(h), gains, dense.dt());
        contact_log.push(out.contacts.iter().map(|c| c.in_contact).collect());
        if out.failed {
            states.push(out.state);
            return RolloutResult {
                cost: f64::INFINITY,
                states,
                contact_log,
                cost_terms: terms,
                failed: true,
            };
        }
        terms.accumulate(&running_cost(&out.state, &out.contacts, cost));
        states.push(out.state);
    }
    terms.terminal = terminal_cost(states.last().expect("start state"), start, cost);
    let total = terms.total();
    RolloutResult {
        cost: if total.is_finite() { total } else { f64::INFINITY },
        failed: !total.is_finite(),
        states,
        contact_log,
        cost_terms: terms,
    }
}

/// Executes the first `steps` rows of `traj` from `state`.
///
/// This is the single code path for both state prediction and execution on
/// the plant, so the two agree bit for bit on a deterministic env.
pub fn execute_prefix<E: Environment + ?Sized>(
    env: &E,
    state: &EnvState,
    traj: &DenseTrajectory,
    steps: usize,
    gains: &PdGains,
) -> Result<Vec<StepOutcome>> {
    if steps > traj.len() {
        return Err(Error::Domain(format!(
            "cannot execute {steps} steps of a {}-step trajectory",
            traj.len()
        )));
    }
    let mut outcomes: Vec<StepOutcome> = Vec::with_capacity(steps);
    for h in 0..steps {
        let current = outcomes.last().map_or(state, |o| &o.state);
        let out = env.step_pd(current, traj.position(h), traj.velocity(h), gains, traj.dt());
        outcomes.push(out);
    }
    Ok(outcomes)
}
