//! Parent plane, friction and swarm member models.

use serde::{Deserialize, Serialize};

use crate::abstraction::AbstractState;
use crate::error::{Error, Result};

/// Physical constants of the plane and its bearing friction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicalParams {
    /// Plane inertia (kg·m²).
    pub j: f64,
    /// Plane length (m).
    pub l: f64,
    pub g: f64,
    /// Friction coefficients γ1..γ6.
    pub gamma: [f64; 6],
    pub theta_max: f64,
    pub tau_max: f64,
}

impl Default for PhysicalParams {
    fn default() -> Self {
        Self {
            j: 0.5,
            l: 1.0,
            g: 9.81,
            gamma: [0.01, 1000.0, 700.0, 0.02, 1000.0, 1.0],
            theta_max: 0.2,
            tau_max: 5.0,
        }
    }
}

impl PhysicalParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidParameter(what.to_string()));
        if !(self.j > 0.0) {
            return bad("J must be positive");
        }
        if !(self.l > 0.0) {
            return bad("L must be positive");
        }
        if !(self.g > 0.0) {
            return bad("g must be positive");
        }
        if self.gamma.iter().any(|&x| !(x > 0.0)) {
            return bad("all friction coefficients must be positive");
        }
        if self.gamma[1] <= self.gamma[2] {
            return bad("gamma2 must exceed gamma3");
        }
        if !(self.theta_max > 0.0 && self.theta_max < std::f64::consts::FRAC_PI_2) {
            return bad("theta_max must lie in (0, pi/2)");
        }
        if !(self.tau_max > 0.0) {
            return bad("tau_max must be positive");
        }
        Ok(())
    }

    /// γ4 ≤ γ1. Table I itself violates this, so it is reported rather than enforced.
    pub fn stribeck_ordering_holds(&self) -> bool {
        self.gamma[3] <= self.gamma[0]
    }

    pub fn half_length(&self) -> f64 {
        0.5 * self.l
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ParentState {
    pub theta: f64,
    pub omega: f64,
}

impl ParentState {
    pub fn new(theta: f64, omega: f64) -> Self {
        Self { theta, omega }
    }

    pub fn within_limit(&self, params: &PhysicalParams) -> bool {
        self.theta.abs() <= params.theta_max
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MemberKind {
    /// Velocity-controlled single integrator.
    Si,
    /// Force-controlled double integrator with viscous damping.
    Di,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SwarmMember {
    pub kind: MemberKind,
    pub mass: f64,
    #[serde(default)]
    pub damping: f64,
    pub position: f64,
    /// DI velocity; for SI members, the last commanded input.
    #[serde(default)]
    pub velocity: f64,
}

impl SwarmMember {
    pub fn si(mass: f64, position: f64) -> Self {
        Self {
            kind: MemberKind::Si,
            mass,
            damping: 0.0,
            position,
            velocity: 0.0,
        }
    }

    pub fn di(mass: f64, damping: f64, position: f64, velocity: f64) -> Self {
        Self {
            kind: MemberKind::Di,
            mass,
            damping,
            position,
            velocity,
        }
    }

    pub fn is_di(&self) -> bool {
        self.kind == MemberKind::Di
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mass > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "member mass {} must be positive",
                self.mass
            )));
        }
        if self.is_di() && !(self.damping > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "double-integrator damping {} must be positive",
                self.damping
            )));
        }
        if !self.position.is_finite() || !self.velocity.is_finite() {
            return Err(Error::InvalidParameter(
                "member state must be finite".into(),
            ));
        }
        Ok(())
    }

    pub fn within_box(&self, params: &PhysicalParams) -> bool {
        self.position.abs() <= params.half_length()
    }
}

pub type SwarmState = Vec<SwarmMember>;

/// Time derivative of one member's state: (ṗ, v̇).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MemberDeriv {
    pub p_dot: f64,
    pub v_dot: f64,
}

pub fn member_deriv(m: &SwarmMember, u: f64) -> MemberDeriv {
    match m.kind {
        MemberKind::Si => MemberDeriv {
            p_dot: u,
            v_dot: 0.0,
        },
        MemberKind::Di => MemberDeriv {
            p_dot: m.velocity,
            v_dot: (u - m.damping * m.velocity) / m.mass,
        },
    }
}

/// Bearing friction torque, an odd Stribeck-like curve.
pub fn friction_torque(omega: f64, params: &PhysicalParams) -> f64 {
    let [g1, g2, g3, g4, g5, g6] = params.gamma;
    g1 * ((g2 * omega).tanh() - (g3 * omega).tanh()) + g4 * (g5 * omega).tanh() + g6 * omega
}

/// d f_f / dω.
pub fn friction_slope(omega: f64, params: &PhysicalParams) -> f64 {
    let [g1, g2, g3, g4, g5, g6] = params.gamma;
    g1 * (g2 * sech2(g2 * omega) - g3 * sech2(g3 * omega)) + g4 * g5 * sech2(g5 * omega) + g6
}

/// d² f_f / dω².
pub fn friction_curvature(omega: f64, params: &PhysicalParams) -> f64 {
    let [g1, g2, g3, g4, g5, _] = params.gamma;
    let d = |k: f64| -2.0 * k * k * (k * omega).tanh() * sech2(k * omega);
    g1 * (d(g2) - d(g3)) + g4 * d(g5)
}

pub(crate) fn sech2(x: f64) -> f64 {
    let c = x.cosh();
    if c.is_finite() {
        1.0 / (c * c)
    } else {
        0.0
    }
}

/// Plane angular acceleration given the abstract coupling state.
pub fn parent_accel(
    p: ParentState,
    a: &AbstractState,
    params: &PhysicalParams,
    tau_d: f64,
) -> Result<f64> {
    let inertia = params.j + a.j_s;
    if !(inertia > 0.0) {
        return Err(Error::NonPositiveInertia(inertia));
    }
    let num = -p.theta.cos() * params.g * a.m1
        - p.omega * a.j_s_dot
        - friction_torque(p.omega, params)
        - tau_d;
    Ok(num / inertia)
}

/// Sinusoidal disturbance torque.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Disturbance {
    pub amplitude: f64,
    pub frequency: f64,
}

impl Disturbance {
    pub fn eval(&self, t: f64) -> f64 {
        self.amplitude * (self.frequency * t).sin()
    }

    pub fn rate(&self, t: f64) -> f64 {
        self.amplitude * self.frequency * (self.frequency * t).cos()
    }

    pub fn accel(&self, t: f64) -> f64 {
        -self.amplitude * self.frequency * self.frequency * (self.frequency * t).sin()
    }

    pub fn rate_bound(&self) -> f64 {
        (self.amplitude * self.frequency).abs()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn friction_is_odd_and_zero_at_rest() {
        let p = PhysicalParams::default();
        assert_eq!(friction_torque(0.0, &p), 0.0);
        for &w in &[1e-4, 0.003, 0.2, 4.0] {
            assert_relative_eq!(friction_torque(-w, &p), -friction_torque(w, &p));
        }
    }

    #[test]
    fn friction_small_rate_value() {
        let p = PhysicalParams::default();
        let expected = 0.01 * (10f64.tanh() - 7f64.tanh()) + 0.02 * 10f64.tanh() + 0.01;
        assert_relative_eq!(friction_torque(0.01, &p), expected, epsilon = 1e-15);
        assert!((friction_torque(0.01, &p) - 0.0300).abs() < 1e-4);
    }

    #[test]
    fn friction_derivatives_match_differences() {
        let p = PhysicalParams::default();
        for &w in &[-0.004, 0.0007, 0.002, 0.5] {
            let h = 1e-7;
            let fd = (friction_torque(w + h, &p) - friction_torque(w - h, &p)) / (2.0 * h);
            assert_relative_eq!(friction_slope(w, &p), fd, max_relative = 1e-5);
            let fd2 = (friction_slope(w + h, &p) - friction_slope(w - h, &p)) / (2.0 * h);
            assert_relative_eq!(
                friction_curvature(w, &p),
                fd2,
                max_relative = 1e-4,
                epsilon = 1e-3
            );
        }
    }

    #[test]
    fn accel_at_nominal_initial_abstract_state() {
        let p = PhysicalParams::default();
        let a = AbstractState {
            m1: 0.0273,
            j_s: 0.0288,
            m1_dot: 0.0,
            j_s_dot: 0.0,
        };
        let acc = parent_accel(ParentState::new(0.0, 0.0), &a, &p, 0.0).unwrap();
        assert_relative_eq!(acc, -9.81 * 0.0273 / 0.5288, epsilon = 1e-12);
        assert!((acc + 0.5065).abs() < 1e-4);
    }

    #[test]
    fn accel_symmetry_and_equilibrium() {
        let p = PhysicalParams::default();
        let a = AbstractState {
            m1: 0.01,
            j_s: 0.03,
            m1_dot: 0.0,
            j_s_dot: 0.0,
        };
        let neg = AbstractState { m1: -0.01, ..a };
        let x = parent_accel(ParentState::new(0.1, 0.0), &a, &p, 0.0).unwrap();
        let y = parent_accel(ParentState::new(-0.1, 0.0), &neg, &p, 0.0).unwrap();
        assert_relative_eq!(x, -y);
        let zero = AbstractState::default();
        for &th in &[-1.2, 0.0, 0.7] {
            assert_eq!(
                parent_accel(ParentState::new(th, 0.0), &zero, &p, 0.0).unwrap(),
                0.0
            );
        }
    }

    #[test]
    fn non_positive_inertia_rejected() {
        let p = PhysicalParams::default();
        let a = AbstractState {
            m1: 0.0,
            j_s: -0.6,
            m1_dot: 0.0,
            j_s_dot: 0.0,
        };
        assert!(matches!(
            parent_accel(ParentState::default(), &a, &p, 0.0),
            Err(Error::NonPositiveInertia(_))
        ));
    }

    #[test]
    fn member_models() {
        assert_eq!(member_deriv(&SwarmMember::si(1.0, 0.0), 0.5).p_dot, 0.5);
        let d = SwarmMember::di(1.0, 1.0, 0.0, 1.0);
        assert_eq!(member_deriv(&d, 0.0).v_dot, -1.0);
        let d2 = SwarmMember::di(0.4, 0.7, 0.1, 0.3);
        assert_eq!(member_deriv(&d2, 0.7 * 0.3).v_dot, 0.0);
    }

    #[test]
    fn table_params_validate() {
        PhysicalParams::default().validate().unwrap();
        assert!(!PhysicalParams::default().stribeck_ordering_holds());
        let bad = PhysicalParams {
            gamma: [0.01, 600.0, 700.0, 0.02, 1000.0, 1.0],
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }
}
