//! Bound calculators: the swarm-inertia rate bound under PD and the
//! perturbation constants of the ARISE analysis.

use serde::{Deserialize, Serialize};

use crate::control::arise::{true_lambda, Regressor};
use crate::control::{AriseGains, ManifoldSpec, PdGains, TrajectorySpec};
use crate::plant::{friction_curvature, friction_slope, Disturbance, PhysicalParams};

/// Treatment of the swarm gain in the linear coefficient of the rate bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KsSign {
    /// `α2 = δJ(k1(J+J_max) + k2γ6) − K_s2`.
    Printed,
    /// `α2 = δJ(k1(J+J_max) + k2γ6) + |K_s2|`.
    #[default]
    Magnitude,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateBoundTerms {
    pub delta_j: f64,
    pub alpha1: f64,
    pub alpha2: f64,
    pub alpha3: f64,
    pub beta1: f64,
    pub beta2: f64,
}

impl RateBoundTerms {
    pub fn new(
        params: &PhysicalParams,
        gains: &PdGains,
        k_s2: f64,
        manifold: &ManifoldSpec,
        sign: KsSign,
    ) -> Self {
        let dj = manifold.slope_max();
        let ks = match sign {
            KsSign::Printed => -k_s2,
            KsSign::Magnitude => k_s2.abs(),
        };
        Self {
            delta_j: dj,
            alpha1: 0.5 * dj * gains.k1,
            alpha2: dj * (gains.k1 * (params.j + manifold.j_max()) + gains.k2 * params.gamma[5])
                + ks,
            alpha3: dj * gains.k2 * (manifold.tau_max + params.gamma[0]),
            beta1: dj * gains.k2,
            beta2: params.j + manifold.j_min(),
        }
    }

    pub fn eval(&self, z: f64) -> f64 {
        (self.alpha1 * z * z + self.alpha2 * z + self.alpha3) / (self.beta1 * z + self.beta2)
    }
}

/// `J̇_max` at error norm `z_norm`.
pub fn jdot_max_bound(
    params: &PhysicalParams,
    gains: &PdGains,
    k_s2: f64,
    manifold: &ManifoldSpec,
    z_norm: f64,
    sign: KsSign,
) -> f64 {
    RateBoundTerms::new(params, gains, k_s2, manifold, sign).eval(z_norm)
}

/// Suprema sampled along the desired trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathBounds {
    /// `sup|τ̇_sd|` from the feed-forward `−Ẏ_dλ`.
    pub tau_dot_max: f64,
    /// `sup|τ̈_sd|` from `−Ÿ_dλ`.
    pub tau_ddot_max: f64,
    /// `sup|Y_dΓẎ_dᵀ|`.
    pub ygy_max: f64,
    pub zeta_nd: f64,
    pub zeta_nd_dot: f64,
    pub samples: usize,
    pub horizon: f64,
}

/// Samples one period (the longer of trajectory and disturbance) at
/// `samples` points and inflates each supremum by `safety`.
#[allow(clippy::too_many_arguments)]
pub fn sample_path_bounds(
    params: &PhysicalParams,
    gains: &AriseGains,
    traj: &TrajectorySpec,
    dist: &Disturbance,
    manifold: &ManifoldSpec,
    samples: usize,
    safety: f64,
) -> PathBounds {
    let lambda = true_lambda(params);
    let dist_period = (dist.frequency != 0.0 && dist.amplitude != 0.0)
        .then(|| std::f64::consts::TAU / dist.frequency.abs());
    let horizon = match (traj.period(), dist_period) {
        (Some(a), Some(b)) => a.max(b),
        (Some(a), None) | (None, Some(a)) => a,
        (None, None) => 0.0,
    };
    let n = samples.max(1);
    let js = [manifold.j_min(), manifold.j_max()];
    let mut b = PathBounds {
        tau_dot_max: 0.0,
        tau_ddot_max: 0.0,
        ygy_max: 0.0,
        zeta_nd: 0.0,
        zeta_nd_dot: 0.0,
        samples: n,
        horizon,
    };
    for k in 0..n {
        let t = horizon * k as f64 / n as f64;
        let d = traj.derivs(t);
        let reg = Regressor::at(traj, &gains.gamma_bar, t);
        let yd: f64 = reg.y_dot.dot(&lambda);
        let ydd: f64 = reg.y_ddot.dot(&lambda);
        b.tau_dot_max = b.tau_dot_max.max(yd.abs());
        b.tau_ddot_max = b.tau_ddot_max.max(ydd.abs());
        let ygy: f64 = reg.y.dot(&(gains.gamma * reg.y_dot));
        b.ygy_max = b.ygy_max.max(ygy.abs());
        let f1 = friction_slope(d[1], params);
        let f2 = friction_curvature(d[1], params);
        let ff_dot = f1 * d[2];
        let ff_ddot = f2 * d[2] * d[2] + f1 * d[3];
        for &j in &js {
            let inertia = params.j + j;
            let nd = inertia * d[3] + ff_dot - yd + dist.rate(t);
            let nd_dot = inertia * d[4] + ff_ddot - ydd + dist.accel(t);
            b.zeta_nd = b.zeta_nd.max(nd.abs());
            b.zeta_nd_dot = b.zeta_nd_dot.max(nd_dot.abs());
        }
    }
    b.tau_dot_max *= safety;
    b.tau_ddot_max *= safety;
    b.ygy_max *= safety;
    b.zeta_nd *= safety;
    b.zeta_nd_dot *= safety;
    b
}

/// Constants bounding `|Ñ| ≤ c_max‖z‖`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerturbationConstants {
    /// Friction-rate constant `γ1γ̂2 − γ1γ̂3 + γ4γ̂5 + γ6`.
    pub c: f64,
    pub jdot_max: f64,
    pub jddot_max: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c_max: f64,
}

pub fn friction_rate_constant(params: &PhysicalParams, gamma_bar: &[f64; 3]) -> f64 {
    let g = &params.gamma;
    let g2 = g[1].max(gamma_bar[0]);
    let g3 = g[2].min(gamma_bar[1]);
    let g5 = g[4].max(gamma_bar[2]);
    g[0] * g2 - g[0] * g3 + g[3] * g5 + g[5]
}

pub fn perturbation_constants(
    params: &PhysicalParams,
    gains: &AriseGains,
    manifold: &ManifoldSpec,
    path: &PathBounds,
) -> PerturbationConstants {
    let c = friction_rate_constant(params, &gains.gamma_bar);
    let dj = manifold.slope_max();
    let jdot = dj * path.tau_dot_max;
    let jddot = (dj * path.tau_ddot_max + manifold.curvature() * path.tau_dot_max.powi(2)).abs();
    let (a1, a2) = (gains.alpha1, gains.alpha2);
    let (j, jmax) = (params.j, manifold.j_max());
    let c1 = 0.5 * jdot + path.ygy_max + (j + jmax) * (a1 - a2).abs() + jdot + c;
    let c2 = (1.0 + (2.0 * jdot + (j + jmax) * (a2 - a1)) * a2).abs()
        + (jmax * a1 + jddot + j * a1 * a1 + jdot * a1 - (a1 + a2) * c).abs();
    let c3 = jddot * a1 + 2.0 * jdot * a1 * a1 + (j + jdot) * a1.powi(3) + a1 * a1 * c;
    PerturbationConstants {
        c,
        jdot_max: jdot,
        jddot_max: jddot,
        c1,
        c2,
        c3,
        c_max: c1.max(c2).max(c3),
    }
}

/// `ρ_E(x) = k1 + (1 + α1)x`.
pub fn rho_e(k1: f64, alpha1: f64, x: f64) -> f64 {
    k1 + (1.0 + alpha1) * x
}

/// Inverse of [`rho_e`], `None` when `y < k1`.
pub fn rho_e_inv(k1: f64, alpha1: f64, y: f64) -> Option<f64> {
    (y >= k1).then(|| (y - k1) / (1.0 + alpha1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    const GAINS: PdGains = PdGains {
        k1: 3.1623,
        k2: 3.2859,
    };

    #[test]
    fn rate_bound_at_origin() {
        let p = PhysicalParams::default();
        let m = ManifoldSpec::default();
        let v = jdot_max_bound(&p, &GAINS, 10.0, &m, 0.0, KsSign::Magnitude);
        assert_relative_eq!(
            v,
            0.125 * 3.2859 * (5.0 + 0.01) / (0.5 + 0.025),
            max_relative = 1e-12
        );
    }

    #[test]
    fn flat_manifold_leaves_gain_term() {
        let p = PhysicalParams::default();
        let m = ManifoldSpec {
            quad: 0.0,
            ..ManifoldSpec::default()
        };
        let v = jdot_max_bound(&p, &GAINS, 10.0, &m, 0.2, KsSign::Magnitude);
        assert_relative_eq!(v, 10.0 * 0.2 / 0.525, max_relative = 1e-12);
    }

    #[test]
    fn rate_bound_grows_with_norm_under_magnitude() {
        let p = PhysicalParams::default();
        let m = ManifoldSpec::default();
        let lo = jdot_max_bound(&p, &GAINS, 10.0, &m, 0.05, KsSign::Magnitude);
        let hi = jdot_max_bound(&p, &GAINS, 10.0, &m, 0.15, KsSign::Magnitude);
        assert!(hi > lo);
    }

    #[test]
    fn friction_constant_for_table_values() {
        let p = PhysicalParams::default();
        assert_relative_eq!(
            friction_rate_constant(&p, &[1000.0, 700.0, 1000.0]),
            24.0,
            epsilon = 1e-12
        );
        // Pessimistic estimates widen the constant.
        assert!(friction_rate_constant(&p, &[2000.0, 500.0, 1000.0]) > 24.0);
    }

    #[test]
    fn zero_trajectory_has_zero_zetas() {
        let p = PhysicalParams::default();
        let g = AriseGains::nominal(&p);
        let b = sample_path_bounds(
            &p,
            &g,
            &TrajectorySpec::zero(),
            &Disturbance::default(),
            &ManifoldSpec::default(),
            100,
            1.1,
        );
        assert_eq!((b.zeta_nd, b.zeta_nd_dot, b.tau_dot_max), (0.0, 0.0, 0.0));
    }

    #[test]
    fn perturbation_constants_scale_with_adaptation_gain() {
        let p = PhysicalParams::default();
        let traj = TrajectorySpec {
            amplitude: 0.7,
            frequency: 0.015 * std::f64::consts::PI,
        };
        let m = ManifoldSpec::default();
        let g = AriseGains::nominal(&p);
        let mut g2 = g.clone();
        g2.gamma *= 2.0;
        let b1 = sample_path_bounds(&p, &g, &traj, &Disturbance::default(), &m, 2000, 1.0);
        let b2 = sample_path_bounds(&p, &g2, &traj, &Disturbance::default(), &m, 2000, 1.0);
        assert_relative_eq!(b2.ygy_max, 2.0 * b1.ygy_max, max_relative = 1e-12);
        let c = perturbation_constants(&p, &g, &m, &b1);
        assert!(c.c_max >= c.c1 && c.c_max >= c.c2 && c.c_max >= c.c3 && c.c_max >= 0.0);
    }

    #[test]
    fn rho_inverse_round_trips() {
        assert_eq!(rho_e_inv(10.0, 1.0, 9.0), None);
        let x = rho_e_inv(10.0, 1.0, 10.6).unwrap();
        assert_relative_eq!(rho_e(10.0, 1.0, x), 10.6);
    }
}
