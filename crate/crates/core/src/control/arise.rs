//! Adaptive robust integral of the sign of the error (ARISE) tracking control.
//!
//! The adaptive estimate is carried in integral form so no acceleration
//! measurement enters the estimate itself:
//!
//! ```text
//! λ̂(t) = λ̂(t0) + Γ[Ẏ_dᵀe2]_{t0}^{t} − Γμ2,   μ̇2 = Ÿ_dᵀe2 − α2Ẏ_dᵀe2
//! ```
//!
//! which differentiates to `λ̂̇ = ΓẎ_dᵀr` with `r = ė2 + α2e2`.

use nalgebra::{Matrix4, Vector4};

use super::{DesiredAbstract, ManifoldSpec, TrajectorySpec};
use crate::error::{Error, Result};
use crate::plant::{sech2, ParentState, PhysicalParams};

#[derive(Debug, Clone, PartialEq)]
pub struct AriseGains {
    pub alpha1: f64,
    pub alpha2: f64,
    pub k_s: f64,
    pub beta: f64,
    pub gamma: Matrix4<f64>,
    /// Fixed estimates of γ2, γ3, γ5.
    pub gamma_bar: [f64; 3],
    /// Initial estimate of (J, γ1, γ4, γ6).
    pub lambda_hat0: Vector4<f64>,
    /// Half-width of a linear band replacing sgn; 0 keeps the exact sign.
    pub sgn_boundary: f64,
}

impl AriseGains {
    pub fn nominal(params: &PhysicalParams) -> Self {
        let truth = true_lambda(params);
        Self {
            alpha1: 1.0,
            alpha2: 2.0,
            k_s: 1.0,
            beta: 0.5,
            gamma: Matrix4::from_diagonal(&Vector4::new(10.0, 1.0, 1.0, 10.0)),
            gamma_bar: [params.gamma[1], params.gamma[2], params.gamma[4]],
            lambda_hat0: truth - Vector4::new(0.0434, 0.001, 0.01, 0.1),
            sgn_boundary: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let sym = (self.gamma - self.gamma.transpose()).norm() <= 1e-12 * self.gamma.norm();
        if !sym || self.gamma.cholesky().is_none() {
            return Err(Error::InvalidParameter(
                "Gamma must be symmetric positive definite".into(),
            ));
        }
        if ![self.alpha1, self.alpha2, self.k_s, self.beta]
            .iter()
            .all(|x| x.is_finite())
        {
            return Err(Error::InvalidParameter("ARISE gains must be finite".into()));
        }
        if !(self.sgn_boundary >= 0.0) {
            return Err(Error::InvalidParameter(
                "sgn boundary must be nonnegative".into(),
            ));
        }
        Ok(())
    }

    pub fn sgn(&self, e2: f64) -> f64 {
        if self.sgn_boundary > 0.0 {
            (e2 / self.sgn_boundary).clamp(-1.0, 1.0)
        } else if e2 > 0.0 {
            1.0
        } else if e2 < 0.0 {
            -1.0
        } else {
            0.0
        }
    }
}

/// `(J, γ1, γ4, γ6)` of the plant.
pub fn true_lambda(params: &PhysicalParams) -> Vector4<f64> {
    Vector4::new(params.j, params.gamma[0], params.gamma[3], params.gamma[5])
}

/// Desired-trajectory regressor and its first two time derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Regressor {
    pub y: Vector4<f64>,
    pub y_dot: Vector4<f64>,
    pub y_ddot: Vector4<f64>,
}

impl Regressor {
    pub fn at(traj: &TrajectorySpec, gamma_bar: &[f64; 3], t: f64) -> Self {
        let d = traj.derivs(t);
        let (w, wd, wdd) = (d[1], d[2], d[3]);
        let th = |k: f64| {
            let s = sech2(k * w);
            let tt = (k * w).tanh();
            (tt, k * s * wd, k * s * wdd - 2.0 * k * k * tt * s * wd * wd)
        };
        let (a0, a1, a2) = th(gamma_bar[0]);
        let (b0, b1, b2) = th(gamma_bar[1]);
        let (c0, c1, c2) = th(gamma_bar[2]);
        Self {
            y: Vector4::new(d[2], a0 - b0, c0, d[1]),
            y_dot: Vector4::new(d[3], a1 - b1, c1, d[2]),
            y_ddot: Vector4::new(d[4], a2 - b2, c2, d[3]),
        }
    }
}

/// Integral states of the controller.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct AriseState {
    pub mu1: f64,
    pub mu2: Vector4<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AriseOutput {
    pub desired: DesiredAbstract,
    pub lambda_hat: Vector4<f64>,
    pub e1: f64,
    pub e2: f64,
    pub r: f64,
    pub sgn: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AriseController {
    pub gains: AriseGains,
    pub traj: TrajectorySpec,
    pub t0: f64,
    e2_0: f64,
    boundary0: Vector4<f64>,
}

impl AriseController {
    pub fn new(gains: AriseGains, traj: TrajectorySpec, x0: ParentState, t0: f64) -> Result<Self> {
        gains.validate()?;
        let mut c = Self {
            gains,
            traj,
            t0,
            e2_0: 0.0,
            boundary0: Vector4::zeros(),
        };
        let (_, e2) = c.errors(t0, x0);
        c.e2_0 = e2;
        c.boundary0 = c.regressor(t0).y_dot * e2;
        Ok(c)
    }

    pub fn regressor(&self, t: f64) -> Regressor {
        Regressor::at(&self.traj, &self.gains.gamma_bar, t)
    }

    /// `(e1, e2)`.
    pub fn errors(&self, t: f64, x: ParentState) -> (f64, f64) {
        let d = self.traj.derivs(t);
        let e1 = d[0] - x.theta;
        (e1, d[1] - x.omega + self.gains.alpha1 * e1)
    }

    pub fn lambda_hat(&self, t: f64, x: ParentState, st: &AriseState) -> Vector4<f64> {
        let (_, e2) = self.errors(t, x);
        let reg = self.regressor(t);
        self.gains.lambda_hat0 + self.gains.gamma * (reg.y_dot * e2 - self.boundary0)
            - self.gains.gamma * st.mu2
    }

    /// Controller output. `theta_ddot` is the plane acceleration used for the
    /// torque rate handed to the swarm.
    pub fn output(
        &self,
        t: f64,
        x: ParentState,
        st: &AriseState,
        theta_ddot: f64,
        manifold: &ManifoldSpec,
        g: f64,
    ) -> Result<AriseOutput> {
        if !(x.theta.abs() < std::f64::consts::FRAC_PI_2) {
            return Err(Error::SecantDomain(x.theta.abs()));
        }
        let gn = &self.gains;
        let d = self.traj.derivs(t);
        let reg = self.regressor(t);
        let (e1, e2) = self.errors(t, x);
        let lam = self.lambda_hat(t, x, st);
        let ks1 = gn.k_s + 1.0;
        let big_x = reg.y.dot(&lam) + ks1 * (e2 - self.e2_0) + st.mu1;
        let (s, c) = x.theta.sin_cos();
        let tau = -big_x / c;

        let e2_dot = d[2] - theta_ddot + gn.alpha1 * (d[1] - x.omega);
        let r = e2_dot + gn.alpha2 * e2;
        let lam_dot = gn.gamma * reg.y_dot * r;
        let sgn = gn.sgn(e2);
        let mu1_dot = ks1 * gn.alpha2 * e2 + gn.beta * sgn;
        let x_dot = reg.y_dot.dot(&lam) + reg.y.dot(&lam_dot) + ks1 * e2_dot + mu1_dot;
        let tau_dot = -(x_dot + big_x * (s / c) * x.omega) / c;

        Ok(AriseOutput {
            desired: DesiredAbstract::from_torque(tau, tau_dot, manifold, g),
            lambda_hat: lam,
            e1,
            e2,
            r,
            sgn,
        })
    }

    /// `(μ̇1, μ̇2)` with the sign term supplied by the caller.
    pub fn state_deriv(&self, t: f64, x: ParentState, sgn: f64) -> AriseState {
        let (_, e2) = self.errors(t, x);
        let reg = self.regressor(t);
        let gn = &self.gains;
        AriseState {
            mu1: (gn.k_s + 1.0) * gn.alpha2 * e2 + gn.beta * sgn,
            mu2: (reg.y_ddot - reg.y_dot * gn.alpha2) * e2,
        }
    }
}

/// One controller update with the plane state held over `[t, t + dt]`.
///
/// Returns the output at `t` and the integral states at `t + dt`. The
/// simulator integrates the integral states jointly with the plant instead.
#[allow(clippy::too_many_arguments)]
pub fn arise_parent_control(
    x: ParentState,
    ctrl: &AriseController,
    st: &AriseState,
    theta_ddot: f64,
    manifold: &ManifoldSpec,
    g: f64,
    t: f64,
    dt: f64,
) -> Result<(AriseOutput, AriseState)> {
    let out = ctrl.output(t, x, st, theta_ddot, manifold, g)?;
    let f = |tt: f64| ctrl.state_deriv(tt, x, out.sgn);
    let (k1, k2, k4) = (f(t), f(t + 0.5 * dt), f(t + dt));
    let next = AriseState {
        mu1: st.mu1 + dt / 6.0 * (k1.mu1 + 4.0 * k2.mu1 + k4.mu1),
        mu2: st.mu2 + (k1.mu2 + k2.mu2 * 4.0 + k4.mu2) * (dt / 6.0),
    };
    Ok((out, next))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn nominal_traj() -> TrajectorySpec {
        TrajectorySpec {
            amplitude: 0.7,
            frequency: 0.015 * std::f64::consts::PI,
        }
    }

    #[test]
    fn regressor_vanishes_at_rest() {
        let r = Regressor::at(&TrajectorySpec::zero(), &[1000.0, 700.0, 1000.0], 3.0);
        assert_eq!(r.y, Vector4::zeros());
    }

    #[test]
    fn regressor_derivatives_match_differences() {
        let tr = nominal_traj();
        let gb = [1000.0, 700.0, 1000.0];
        let h = 1e-4;
        for &t in &[0.5, 33.0, 33.333, 66.5, 100.1] {
            let (p, m, c) = (
                Regressor::at(&tr, &gb, t + h),
                Regressor::at(&tr, &gb, t - h),
                Regressor::at(&tr, &gb, t),
            );
            for k in 0..4 {
                assert_relative_eq!(
                    c.y_dot[k],
                    (p.y[k] - m.y[k]) / (2.0 * h),
                    epsilon = 1e-8,
                    max_relative = 1e-5
                );
                assert_relative_eq!(
                    c.y_ddot[k],
                    (p.y_dot[k] - m.y_dot[k]) / (2.0 * h),
                    epsilon = 1e-8,
                    max_relative = 1e-4
                );
            }
        }
    }

    #[test]
    fn zero_error_start_is_pure_feedforward() {
        let params = PhysicalParams::default();
        let mut gains = AriseGains::nominal(&params);
        gains.lambda_hat0 = true_lambda(&params);
        let tr = TrajectorySpec {
            amplitude: 0.0,
            frequency: 0.0,
        };
        let d = tr.derivs(0.0);
        let x = ParentState::new(d[0], d[1]);
        let ctrl = AriseController::new(gains, tr, x, 0.0).unwrap();
        let out = ctrl
            .output(
                0.0,
                x,
                &AriseState::default(),
                0.0,
                &ManifoldSpec::default(),
                9.81,
            )
            .unwrap();
        let reg = ctrl.regressor(0.0);
        assert_relative_eq!(
            out.desired.tau,
            -reg.y.dot(&true_lambda(&params)),
            epsilon = 1e-15
        );

        let tr = nominal_traj();
        let d = tr.derivs(0.0);
        let x = ParentState::new(d[0], d[1]);
        let ctrl = AriseController::new(
            AriseGains {
                lambda_hat0: true_lambda(&params),
                ..AriseGains::nominal(&params)
            },
            tr,
            x,
            0.0,
        )
        .unwrap();
        let out = ctrl
            .output(
                0.0,
                x,
                &AriseState::default(),
                d[2],
                &ManifoldSpec::default(),
                9.81,
            )
            .unwrap();
        let ff = -ctrl.regressor(0.0).y.dot(&true_lambda(&params)) / x.theta.cos();
        assert_relative_eq!(out.desired.tau, ff, epsilon = 1e-15);
        assert_eq!((out.e1, out.e2), (0.0, 0.0));
    }

    #[test]
    fn secant_domain_enforced() {
        let params = PhysicalParams::default();
        let ctrl = AriseController::new(
            AriseGains::nominal(&params),
            nominal_traj(),
            ParentState::default(),
            0.0,
        )
        .unwrap();
        let x = ParentState::new(std::f64::consts::FRAC_PI_2, 0.0);
        assert!(matches!(
            ctrl.output(
                0.0,
                x,
                &AriseState::default(),
                0.0,
                &ManifoldSpec::default(),
                9.81
            ),
            Err(Error::SecantDomain(_))
        ));
    }

    #[test]
    fn integral_form_differentiates_to_gradient_law() {
        // Drive a synthetic plane motion and compare d/dt λ̂ with ΓẎᵀr.
        let params = PhysicalParams::default();
        let ctrl = AriseController::new(
            AriseGains::nominal(&params),
            nominal_traj(),
            ParentState::new(0.075, 0.0),
            0.0,
        )
        .unwrap();
        let theta = |t: f64| 0.075 * (-0.3 * t).exp() + 0.02 * (0.9 * t).sin();
        let omega = |t: f64| -0.0225 * (-0.3 * t).exp() + 0.018 * (0.9 * t).cos();
        let accel = |t: f64| 0.00675 * (-0.3 * t).exp() - 0.0162 * (0.9 * t).sin();
        let x = |t: f64| ParentState::new(theta(t), omega(t));

        let dt = 1e-4;
        let mut st = AriseState::default();
        let mut t = 0.0;
        while t < 2.0 - 1e-12 {
            let f = |tt: f64| ctrl.state_deriv(tt, x(tt), 0.0).mu2;
            let (k1, k2, k4) = (f(t), f(t + 0.5 * dt), f(t + dt));
            st.mu2 += (k1 + k2 * 4.0 + k4) * (dt / 6.0);
            t += dt;
        }
        let h = 1e-4;
        let mut ahead = st;
        ahead.mu2 += ctrl.state_deriv(t, x(t), 0.0).mu2 * h;
        let mut behind = st;
        behind.mu2 -= ctrl.state_deriv(t, x(t), 0.0).mu2 * h;
        let fd = (ctrl.lambda_hat(t + h, x(t + h), &ahead)
            - ctrl.lambda_hat(t - h, x(t - h), &behind))
            / (2.0 * h);
        let out = ctrl
            .output(t, x(t), &st, accel(t), &ManifoldSpec::default(), 9.81)
            .unwrap();
        let reg = ctrl.regressor(t);
        let expected = ctrl.gains.gamma * reg.y_dot * out.r;
        for k in 0..4 {
            assert_relative_eq!(fd[k], expected[k], epsilon = 1e-7, max_relative = 1e-4);
        }
    }

    #[test]
    fn torque_rate_matches_difference() {
        let params = PhysicalParams::default();
        let mut gains = AriseGains::nominal(&params);
        gains.sgn_boundary = 10.0;
        let ctrl =
            AriseController::new(gains, nominal_traj(), ParentState::new(0.075, 0.0), 0.0).unwrap();
        let (th0, om, acc) = (0.06, 0.01, -0.02);
        let st = AriseState {
            mu1: 0.01,
            mu2: Vector4::new(1e-3, 0.0, -2e-3, 1e-4),
        };
        let t = 5.0;
        let m = ManifoldSpec::default();
        let out = ctrl
            .output(t, ParentState::new(th0, om), &st, acc, &m, 9.81)
            .unwrap();
        let h = 1e-6;
        let xs = |s: f64| ParentState::new(th0 + om * s + 0.5 * acc * s * s, om + acc * s);
        let dmu = ctrl.state_deriv(t, xs(0.0), out.sgn);
        let shifted = |s: f64| AriseState {
            mu1: st.mu1 + dmu.mu1 * s,
            mu2: st.mu2 + dmu.mu2 * s,
        };
        let tp = ctrl
            .output(t + h, xs(h), &shifted(h), acc, &m, 9.81)
            .unwrap()
            .desired
            .tau;
        let tm = ctrl
            .output(t - h, xs(-h), &shifted(-h), acc, &m, 9.81)
            .unwrap()
            .desired
            .tau;
        assert_relative_eq!(
            out.desired.tau_dot,
            (tp - tm) / (2.0 * h),
            max_relative = 1e-5
        );
    }
}
