//! Artificial potential fields: attraction to the formation slot, repulsion
//! from the other drones, the arrow and the arena walls.

use serde::{Deserialize, Serialize};

use crate::env::{Action, EnvConfig, EnvState};
use crate::error::{Error, Result};
use crate::vec3::{Aabb, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ApfParams {
    pub k_att: f64,
    pub k_rep: f64,
    /// Influence radius of every repulsive object, m.
    pub rho0: f64,
    pub v_max: f64,
}

impl Default for ApfParams {
    fn default() -> Self {
        Self {
            k_att: 1.0,
            k_rep: 10.0,
            rho0: 2.0,
            v_max: 0.5,
        }
    }
}

impl ApfParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.k_att > 0.0 && self.k_att.is_finite()) {
            return Err(Error::config("apf.k_att", "must be finite and > 0"));
        }
        if !(self.k_rep > 0.0 && self.k_rep.is_finite()) {
            return Err(Error::config("apf.k_rep", "must be finite and > 0"));
        }
        if !(self.rho0 > 0.0 && self.rho0.is_finite()) {
            return Err(Error::config("apf.rho0", "must be finite and > 0"));
        }
        if !(self.v_max > 0.0 && self.v_max.is_finite()) {
            return Err(Error::config("apf.v_max", "must be finite and > 0"));
        }
        Ok(())
    }

    fn repulsion_cap(&self) -> f64 {
        10.0 * self.v_max
    }

    /// Negative gradient of `½ k_rep (1/ρ − 1/ρ0)²` at distance `rho`, away
    /// from the object along `away`.
    fn repulsion(&self, rho: f64, away: Vec3) -> Vec3 {
        if rho >= self.rho0 {
            return Vec3::ZERO;
        }
        let mag = if rho > 0.0 {
            self.k_rep * (1.0 / rho - 1.0 / self.rho0) / (rho * rho)
        } else {
            f64::INFINITY
        };
        away * mag.min(self.repulsion_cap())
    }
}

/// Potential-field velocity for a drone at `p` heading to `target`, with point
/// obstacles and optionally the inside of `walls` as repulsors.
pub fn apf_velocity_at(p: Vec3, target: Vec3, obstacles: &[Vec3], walls: Option<&Aabb>, params: &ApfParams) -> Vec3 {
    let mut v = (target - p) * params.k_att;
    for &o in obstacles {
        let d = p - o;
        let rho = d.norm();
        let away = if rho > 0.0 { d / rho } else { Vec3::Z };
        v += params.repulsion(rho, away);
    }
    if let Some(walls) = walls {
        for (rho, inward) in walls.faces(p) {
            v += params.repulsion(rho.max(0.0), inward);
        }
    }
    v.clamp_norm(params.v_max)
}

/// Potential-field action for `agent` in the current environment state.
pub fn apf_velocity(state: &EnvState, agent: usize, config: &EnvConfig, params: &ApfParams) -> Result<Action> {
    if agent >= state.n_agents() {
        return Err(Error::Validation(format!(
            "agent {agent} out of range for {} drones",
            state.n_agents()
        )));
    }
    let mut obstacles: Vec<Vec3> = state
        .agent_pos
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != agent)
        .map(|(_, &q)| q)
        .collect();
    if state.arrow_active {
        obstacles.push(state.arrow_pos);
    }
    let walls = config.borders_as_obstacles.then_some(&config.arena);
    Ok(Action::new(apf_velocity_at(
        state.agent_pos[agent],
        config.formation[agent],
        &obstacles,
        walls,
        params,
    )))
}
