//! Lyapunov functions evaluated along logged runs.

use nalgebra::{Matrix4, Vector2, Vector4};
use serde::{Deserialize, Serialize};

use crate::control::SwarmGains;
use crate::plant::{ParentState, SwarmMember};

use super::conditions::check_di_epsilon;

/// `½θ² + ½(J+J_s)ω²`.
pub fn pd_parent_v(x: ParentState, inertia: f64) -> f64 {
    0.5 * x.theta * x.theta + 0.5 * inertia * x.omega * x.omega
}

/// `k1(θ·sinθ + cosθ − 1) + ½(J+J_s)ω²`, whose potential matches the
/// `k1·θ·cosθ` restoring torque of the PD loop.
pub fn pd_parent_energy(x: ParentState, k1: f64, inertia: f64) -> f64 {
    let (s, c) = x.theta.sin_cos();
    k1 * (x.theta * s + c - 1.0) + 0.5 * inertia * x.omega * x.omega
}

/// `e1² + ½e2² + ½(J+J_s)r² + ½λ̃ᵀΓ⁻¹λ̃`.
pub fn arise_parent_v(
    e1: f64,
    e2: f64,
    r: f64,
    inertia: f64,
    lambda_tilde: &Vector4<f64>,
    gamma_inv: &Matrix4<f64>,
) -> f64 {
    e1 * e1
        + 0.5 * e2 * e2
        + 0.5 * inertia * r * r
        + 0.5 * lambda_tilde.dot(&(gamma_inv * lambda_tilde))
}

/// Abstract-error Lyapunov function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "lowercase")]
pub enum SwarmLyapunov {
    /// `½eᵀe`.
    Si,
    /// `½eᵀK_p e + ε·eᵀė + ½ėᵀė`.
    Di { k_p: [f64; 2], eps: f64 },
}

impl SwarmLyapunov {
    pub fn for_swarm(members: &[SwarmMember], gains: &SwarmGains) -> Self {
        if !members.iter().any(SwarmMember::is_di) {
            return SwarmLyapunov::Si;
        }
        let eps = check_di_epsilon(gains.k_p, gains.k_d).map_or(0.0, |w| w.eps);
        SwarmLyapunov::Di {
            k_p: gains.k_p,
            eps,
        }
    }

    pub fn eval(&self, e: Vector2<f64>, e_dot: Vector2<f64>) -> f64 {
        match *self {
            SwarmLyapunov::Si => 0.5 * e.dot(&e),
            SwarmLyapunov::Di { k_p, eps } => {
                let kp = 0.5 * (k_p[0] * e[0] * e[0] + k_p[1] * e[1] * e[1]);
                kp + eps * e.dot(&e_dot) + 0.5 * e_dot.dot(&e_dot)
            }
        }
    }

    /// Time derivative given the abstract error acceleration.
    pub fn rate(&self, e: Vector2<f64>, e_dot: Vector2<f64>, e_ddot: Vector2<f64>) -> f64 {
        match *self {
            SwarmLyapunov::Si => e.dot(&e_dot),
            SwarmLyapunov::Di { k_p, eps } => {
                k_p[0] * e[0] * e_dot[0]
                    + k_p[1] * e[1] * e_dot[1]
                    + eps * e_dot.dot(&e_dot)
                    + (e * eps + e_dot).dot(&e_ddot)
            }
        }
    }
}

/// Monotonicity of a logged Lyapunov sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonitorReport {
    /// Sample pairs examined.
    pub steps: usize,
    /// Pairs where V grew by more than `tol`.
    pub increases: usize,
    /// Fraction of pairs with no increase beyond `tol`.
    pub fraction_nonincreasing: f64,
    pub max_increase: f64,
}

/// Scans `(t, V)` pairs from `after` onward.
pub fn lyapunov_monitor(t: &[f64], v: &[f64], after: f64, tol: f64) -> MonitorReport {
    let start = t.iter().position(|&x| x >= after).unwrap_or(t.len());
    let mut steps = 0;
    let mut increases = 0;
    let mut max_increase: f64 = 0.0;
    for w in v[start.min(v.len())..].windows(2) {
        steps += 1;
        let d = w[1] - w[0];
        max_increase = max_increase.max(d);
        if d > tol {
            increases += 1;
        }
    }
    let fraction_nonincreasing = if steps == 0 {
        1.0
    } else {
        1.0 - increases as f64 / steps as f64
    };
    MonitorReport {
        steps,
        increases,
        fraction_nonincreasing,
        max_increase,
    }
}

/// Fraction of samples where the nominal Lyapunov rate dominates the
/// coupling rate, `|V̇′_p + V̇′_a| > |V̇_pc + V̇_ac|`. NaN entries are skipped.
pub fn decomposition_fraction(nominal: &[f64], coupling: &[f64]) -> Option<f64> {
    let pairs: Vec<_> = nominal
        .iter()
        .zip(coupling)
        .filter(|(a, b)| a.is_finite() && b.is_finite())
        .collect();
    if pairs.is_empty() {
        return None;
    }
    let hits = pairs.iter().filter(|(a, b)| a.abs() > b.abs()).count();
    Some(hits as f64 / pairs.len() as f64)
}
