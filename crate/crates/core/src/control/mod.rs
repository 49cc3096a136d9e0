//! Parent controllers, the desired-abstract-state manifold, and member laws.

pub mod arise;
pub mod lqr;
pub mod manifold;
pub mod pd;
pub mod swarm;
pub mod trajectory;

pub use arise::{
    arise_parent_control, AriseController, AriseGains, AriseOutput, AriseState, Regressor,
};
pub use lqr::{care, lqr_design, DampingConvention, LqrDesign};
pub use manifold::ManifoldSpec;
pub use pd::{pd_parent_control, PdGains};
pub use swarm::{
    di_member_control, heterogeneous_control, si_member_control, AccelFilter, DiLaw, SwarmGains,
};
pub use trajectory::TrajectorySpec;

use nalgebra::Vector2;
use serde::{Deserialize, Serialize};

/// Desired abstract state and its rate, as produced by a parent controller.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct DesiredAbstract {
    pub tau: f64,
    pub tau_dot: f64,
    pub m1: f64,
    pub j_s: f64,
    pub m1_dot: f64,
    pub j_s_dot: f64,
    pub saturated: bool,
}

impl DesiredAbstract {
    /// Lifts a torque command onto the manifold. Saturation freezes the rate.
    pub fn from_torque(tau: f64, tau_dot: f64, manifold: &ManifoldSpec, g: f64) -> Self {
        let (tau_c, saturated) = manifold.clamp(tau);
        let tau_dot = if saturated { 0.0 } else { tau_dot };
        Self {
            tau: tau_c,
            tau_dot,
            m1: tau_c / g,
            j_s: manifold.j_sd(tau_c),
            m1_dot: tau_dot / g,
            j_s_dot: manifold.slope(tau_c) * tau_dot,
            saturated,
        }
    }

    pub fn pos(&self) -> Vector2<f64> {
        Vector2::new(self.m1, self.j_s)
    }

    pub fn rate(&self) -> Vector2<f64> {
        Vector2::new(self.m1_dot, self.j_s_dot)
    }
}
