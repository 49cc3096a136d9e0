//! Fixed-step closed-loop simulation.
//!
//! One step at time `t`:
//! 1. abstract state from the swarm (SI members carry their last command as velocity),
//! 2. plane acceleration from the plant model,
//! 3. parent controller → desired abstract state and rate,
//! 4. filtered `ä_d`,
//! 5. member inputs, SI velocities set to their commands,
//! 6. RK4 over plane, members and controller integrals with inputs held.

mod log;
mod metrics;
mod rk4;
mod sweep;

pub use log::{RunLog, Sample};
pub use metrics::{compute_metrics, Metrics};
pub use rk4::{rk4_step, Rk4};
pub use sweep::{sweep, SweepRow};

use nalgebra::{Matrix4, Vector2, Vector4};
use serde::Serialize;

use crate::abstraction::{abstract_map, AbstractState};
use crate::control::arise::true_lambda;
use crate::control::swarm::abstract_accel;
use crate::control::{
    heterogeneous_control, pd_parent_control, AccelFilter, AriseController, AriseGains,
    AriseOutput, AriseState, DesiredAbstract, ManifoldSpec, PdGains, SwarmGains, TrajectorySpec,
};
use crate::error::{Error, Result};
use crate::plant::{
    friction_torque, parent_accel, Disturbance, MemberKind, ParentState, PhysicalParams,
    SwarmMember,
};
use crate::stability::monitor::{arise_parent_v, pd_parent_energy, pd_parent_v, SwarmLyapunov};

#[derive(Debug, Clone, PartialEq)]
pub enum ParentChoice {
    Pd(PdGains),
    Arise(AriseGains),
}

/// Fully resolved scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub seed: u64,
    pub params: PhysicalParams,
    pub roster: Vec<SwarmMember>,
    pub parent: ParentChoice,
    pub swarm_gains: SwarmGains,
    pub manifold: ManifoldSpec,
    pub trajectory: TrajectorySpec,
    pub disturbance: Disturbance,
    pub initial: ParentState,
    pub dt: f64,
    pub duration: f64,
    pub decimation: usize,
    pub settle_tol: f64,
    pub hard_stop: bool,
    pub accel_filter_tc: f64,
}

impl Scenario {
    pub fn steps(&self) -> usize {
        (self.duration / self.dt).round() as usize
    }
}

#[derive(Debug, Clone)]
enum ParentCtl {
    Pd(PdGains),
    Arise(Box<AriseController>),
}

/// Everything computed at the start of a step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepInfo {
    pub t: f64,
    pub x: ParentState,
    pub theta_d: f64,
    pub tau_d: f64,
    pub theta_ddot: f64,
    pub a: AbstractState,
    pub desired: DesiredAbstract,
    pub a_dd: Vector2<f64>,
    pub u: Vec<f64>,
    /// `Φp̈ + Φ̇ṗ` under the inputs `u`.
    pub realized_accel: Vector2<f64>,
    pub arise: Option<AriseOutput>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunOutput {
    pub log: RunLog,
    pub metrics: Metrics,
}

pub struct Simulation {
    sc: Scenario,
    ctl: ParentCtl,
    k: usize,
    x: ParentState,
    members: Vec<SwarmMember>,
    mu: AriseState,
    filter: AccelFilter,
    rk: Rk4,
    y: Vec<f64>,
    swarm_v: SwarmLyapunov,
    lambda_true: Vector4<f64>,
    gamma_inv: Matrix4<f64>,
}

impl Simulation {
    pub fn new(sc: Scenario) -> Result<Self> {
        if sc.roster.is_empty() {
            return Err(Error::EmptySwarm);
        }
        if !(sc.dt > 0.0) {
            return Err(Error::InvalidParameter("dt must be positive".into()));
        }
        let (ctl, gamma_inv) = match &sc.parent {
            ParentChoice::Pd(g) => (ParentCtl::Pd(*g), Matrix4::zeros()),
            ParentChoice::Arise(g) => {
                let c = AriseController::new(g.clone(), sc.trajectory, sc.initial, 0.0)?;
                let inv = g
                    .gamma
                    .try_inverse()
                    .ok_or_else(|| Error::InvalidParameter("Gamma is singular".into()))?;
                (ParentCtl::Arise(Box::new(c)), inv)
            }
        };
        let n = sc.roster.len();
        Ok(Self {
            swarm_v: SwarmLyapunov::for_swarm(&sc.roster, &sc.swarm_gains),
            lambda_true: true_lambda(&sc.params),
            filter: AccelFilter::new(sc.accel_filter_tc),
            x: sc.initial,
            members: sc.roster.clone(),
            mu: AriseState::default(),
            rk: Rk4::new(2 + 2 * n + 5),
            y: vec![0.0; 2 + 2 * n + 5],
            k: 0,
            ctl,
            gamma_inv,
            sc,
        })
    }

    pub fn scenario(&self) -> &Scenario {
        &self.sc
    }

    pub fn time(&self) -> f64 {
        self.k as f64 * self.sc.dt
    }

    pub fn parent(&self) -> ParentState {
        self.x
    }

    pub fn members(&self) -> &[SwarmMember] {
        &self.members
    }

    pub fn arise_state(&self) -> AriseState {
        self.mu
    }

    /// Evaluates every controller at the current state, updates the `ä_d`
    /// filter and records SI commands as velocities. Call once per step.
    pub fn control(&mut self) -> Result<StepInfo> {
        let t = self.time();
        let p = &self.sc.params;
        let a = abstract_map(&self.members)?;
        let tau_d = self.sc.disturbance.eval(t);
        let theta_ddot = parent_accel(self.x, &a, p, tau_d)?;
        let (desired, arise) = match &self.ctl {
            ParentCtl::Pd(g) => (
                pd_parent_control(self.x, theta_ddot, g, &self.sc.manifold, p.g),
                None,
            ),
            ParentCtl::Arise(c) => {
                let out = c.output(t, self.x, &self.mu, theta_ddot, &self.sc.manifold, p.g)?;
                (out.desired, Some(out))
            }
        };
        let a_dd = self.filter.update(desired.rate(), self.sc.dt);
        let u = heterogeneous_control(&self.members, &desired, a_dd, &self.sc.swarm_gains)?;
        for (m, &ui) in self.members.iter_mut().zip(&u) {
            if m.kind == MemberKind::Si {
                m.velocity = ui;
            }
        }
        let a = abstract_map(&self.members)?;
        let realized_accel = abstract_accel(&self.members, &u);
        if self.sc.hard_stop {
            self.check_constraints(t)?;
        }
        Ok(StepInfo {
            t,
            x: self.x,
            theta_d: self.sc.trajectory.derivs(t)[0],
            tau_d,
            theta_ddot,
            a,
            desired,
            a_dd,
            u,
            realized_accel,
            arise,
        })
    }

    fn check_constraints(&self, t: f64) -> Result<()> {
        let p = &self.sc.params;
        if !self.x.within_limit(p) {
            return Err(Error::ConstraintBreach {
                t,
                what: format!("|theta| = {} > {}", self.x.theta.abs(), p.theta_max),
            });
        }
        if let Some((i, m)) = self
            .members
            .iter()
            .enumerate()
            .find(|(_, m)| !m.within_box(p))
        {
            return Err(Error::ConstraintBreach {
                t,
                what: format!("member {i} at {} outside the plane", m.position),
            });
        }
        Ok(())
    }

    /// Integrates one step with the inputs in `info` held constant.
    pub fn advance(&mut self, info: &StepInfo) -> Result<()> {
        let n = self.members.len();
        let t = self.time();
        let y = &mut self.y;
        y[0] = self.x.theta;
        y[1] = self.x.omega;
        for (i, m) in self.members.iter().enumerate() {
            y[2 + i] = m.position;
            y[2 + n + i] = m.velocity;
        }
        y[2 + 2 * n] = self.mu.mu1;
        y[3 + 2 * n..].copy_from_slice(self.mu.mu2.as_slice());

        let sgn = info.arise.map_or(0.0, |o| o.sgn);
        let members = &self.members;
        let u = &info.u;
        let sc = &self.sc;
        let ctl = &self.ctl;
        self.rk.step(t, y, sc.dt, |tt, y, dy| {
            let mut a = AbstractState::default();
            for (i, m) in members.iter().enumerate() {
                let p = y[2 + i];
                let (v, v_dot) = match m.kind {
                    MemberKind::Si => (u[i], 0.0),
                    MemberKind::Di => {
                        let v = y[2 + n + i];
                        (v, (u[i] - m.damping * v) / m.mass)
                    }
                };
                a.m1 += m.mass * p;
                a.j_s += m.mass * p * p;
                a.m1_dot += m.mass * v;
                a.j_s_dot += 2.0 * m.mass * p * v;
                dy[2 + i] = v;
                dy[2 + n + i] = v_dot;
            }
            let x = ParentState::new(y[0], y[1]);
            dy[0] = x.omega;
            dy[1] = parent_accel(x, &a, &sc.params, sc.disturbance.eval(tt)).unwrap_or(f64::NAN);
            match ctl {
                ParentCtl::Pd(_) => dy[2 + 2 * n..].fill(0.0),
                ParentCtl::Arise(c) => {
                    let d = c.state_deriv(tt, x, sgn);
                    dy[2 + 2 * n] = d.mu1;
                    dy[3 + 2 * n..].copy_from_slice(d.mu2.as_slice());
                }
            }
        })?;

        self.x = ParentState::new(y[0], y[1]);
        for (i, m) in self.members.iter_mut().enumerate() {
            m.position = y[2 + i];
            if m.kind == MemberKind::Di {
                m.velocity = y[2 + n + i];
            }
        }
        self.mu.mu1 = y[2 + 2 * n];
        self.mu.mu2 = Vector4::from_column_slice(&y[3 + 2 * n..]);
        self.k += 1;
        Ok(())
    }

    pub fn step(&mut self) -> Result<StepInfo> {
        let info = self.control()?;
        self.advance(&info)?;
        Ok(info)
    }

    /// Log record for the state described by `info`.
    pub fn sample(&self, info: &StepInfo) -> Sample {
        let p = &self.sc.params;
        let a = &info.a;
        let d = &info.desired;
        let x = info.x;
        let inertia = p.j + a.j_s;
        let e = d.pos() - a.pos();
        let e_dot = d.rate() - a.rate();
        let e_ddot = info.a_dd - info.realized_accel;
        let e_tau = d.tau - p.g * a.m1;
        let (v_p, v_p_energy, lambda_hat, vdot_nominal, vdot_coupling) =
            match (&self.ctl, &info.arise) {
                (ParentCtl::Arise(_), Some(o)) => {
                    let lt = self.lambda_true - o.lambda_hat;
                    let v = arise_parent_v(o.e1, o.e2, o.r, inertia, &lt, &self.gamma_inv);
                    (v, v, Some(o.lambda_hat.into()), f64::NAN, f64::NAN)
                }
                (ParentCtl::Pd(g), _) => {
                    let c = x.theta.cos();
                    let f = friction_torque(x.omega, p);
                    let nominal = x.theta * x.omega
                        - 0.5 * a.j_s_dot * x.omega * x.omega
                        - x.omega * c * d.tau
                        - x.omega * f
                        - x.omega * info.tau_d
                        + self.swarm_v.rate(e, e_dot, e_ddot);
                    let coupling = x.omega * c * e_tau;
                    (
                        pd_parent_v(x, inertia),
                        pd_parent_energy(x, g.k1, inertia),
                        None,
                        nominal,
                        coupling,
                    )
                }
                (ParentCtl::Arise(_), None) => unreachable!(),
            };
        Sample {
            t: info.t,
            theta: x.theta,
            omega: x.omega,
            theta_d: info.theta_d,
            p: self.members.iter().map(|m| m.position).collect(),
            v: self.members.iter().map(|m| m.velocity).collect(),
            tau_sd: d.tau,
            m1: a.m1,
            j_s: a.j_s,
            j_s_dot: a.j_s_dot,
            m1_d: d.m1,
            j_sd: d.j_s,
            e_tau,
            e_j: e[1],
            v_p,
            v_p_energy,
            v_a: self.swarm_v.eval(e, e_dot),
            vdot_nominal,
            vdot_coupling,
            lambda_hat,
            theta_flag: !x.within_limit(p),
            position_flag: self.members.iter().any(|m| !m.within_box(p)),
            saturated: d.saturated,
        }
    }

    /// Runs to the configured duration, logging every `decimation` steps
    /// including the final state.
    pub fn run(mut self) -> Result<RunOutput> {
        let n = self.sc.steps();
        let dec = self.sc.decimation.max(1);
        let mut log = RunLog::new(self.members.len(), matches!(self.ctl, ParentCtl::Arise(_)));
        for k in 0..=n {
            if self.x.theta.abs() >= std::f64::consts::FRAC_PI_2 {
                return Err(Error::TippedOver {
                    t: self.time(),
                    theta: self.x.theta.abs(),
                });
            }
            let info = self.control()?;
            if k % dec == 0 {
                log.samples.push(self.sample(&info));
            }
            if k < n {
                self.advance(&info)?;
            }
        }
        let metrics = compute_metrics(&log, self.sc.settle_tol);
        Ok(RunOutput { log, metrics })
    }
}

pub fn run_scenario(sc: Scenario) -> Result<RunOutput> {
    Simulation::new(sc)?.run()
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn nominal_roster(kinds: [MemberKind; 4]) -> Vec<SwarmMember> {
        let m = [0.3552, 0.3532, 0.6762, 0.4596];
        let c = [0.7290, 1.4133, 0.6524, 1.3258];
        (0..4)
            .map(|i| {
                let p = if i % 2 == 0 { 0.125 } else { -0.125 };
                match kinds[i] {
                    MemberKind::Si => SwarmMember::si(m[i], p),
                    MemberKind::Di => SwarmMember::di(m[i], c[i], p, 0.0),
                }
            })
            .collect()
    }

    pub(crate) fn pd_scenario(kinds: [MemberKind; 4], duration: f64) -> Scenario {
        let params = PhysicalParams::default();
        Scenario {
            name: "test".into(),
            seed: 0,
            params,
            roster: nominal_roster(kinds),
            parent: ParentChoice::Pd(PdGains {
                k1: 3.1623,
                k2: 3.2859,
            }),
            swarm_gains: SwarmGains::default(),
            manifold: ManifoldSpec::default(),
            trajectory: TrajectorySpec::zero(),
            disturbance: Disturbance::default(),
            initial: ParentState::new(0.1, 0.0),
            dt: 1e-3,
            duration,
            decimation: 10,
            settle_tol: 0.005,
            hard_stop: false,
            accel_filter_tc: 1e-2,
        }
    }

    #[test]
    fn log_spacing_and_final_sample() {
        let out = run_scenario(pd_scenario([MemberKind::Si; 4], 0.5)).unwrap();
        assert_eq!(out.log.samples.len(), 51);
        assert!((out.log.samples.last().unwrap().t - 0.5).abs() < 1e-12);
        for w in out.log.samples.windows(2) {
            assert!((w[1].t - w[0].t - 0.01).abs() < 1e-12);
        }
    }

    #[test]
    fn logged_abstract_state_matches_positions() {
        let out = run_scenario(pd_scenario(
            [
                MemberKind::Si,
                MemberKind::Si,
                MemberKind::Di,
                MemberKind::Di,
            ],
            1.0,
        ))
        .unwrap();
        let m = [0.3552, 0.3532, 0.6762, 0.4596];
        for s in &out.log.samples {
            let m1: f64 = s.p.iter().zip(m).map(|(p, m)| m * p).sum();
            let js: f64 = s.p.iter().zip(m).map(|(p, m)| m * p * p).sum();
            assert!((m1 - s.m1).abs() < 1e-14 && (js - s.j_s).abs() < 1e-14);
        }
    }

    #[test]
    fn deterministic() {
        let a = run_scenario(pd_scenario([MemberKind::Di; 4], 0.3)).unwrap();
        let b = run_scenario(pd_scenario([MemberKind::Di; 4], 0.3)).unwrap();
        assert_eq!(a.log, b.log);
    }

    #[test]
    fn hard_stop_reports_breach() {
        let mut sc = pd_scenario([MemberKind::Si; 4], 1.0);
        sc.initial = ParentState::new(0.3, 0.0);
        sc.hard_stop = true;
        assert!(matches!(
            run_scenario(sc),
            Err(Error::ConstraintBreach { .. })
        ));
    }
}
