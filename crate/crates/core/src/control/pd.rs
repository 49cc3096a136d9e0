use serde::{Deserialize, Serialize};

use super::{DesiredAbstract, ManifoldSpec};
use crate::plant::ParentState;

/// `τ_sd = k1·θ + k2·ω`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PdGains {
    pub k1: f64,
    pub k2: f64,
}

impl PdGains {
    pub fn torque(&self, x: ParentState) -> f64 {
        self.k1 * x.theta + self.k2 * x.omega
    }
}

/// Desired abstract state under PD. `theta_ddot` is the plane acceleration
/// used for the torque rate.
pub fn pd_parent_control(
    x: ParentState,
    theta_ddot: f64,
    gains: &PdGains,
    manifold: &ManifoldSpec,
    g: f64,
) -> DesiredAbstract {
    let tau = gains.torque(x);
    let tau_dot = gains.k1 * x.omega + gains.k2 * theta_ddot;
    DesiredAbstract::from_torque(tau, tau_dot, manifold, g)
}
