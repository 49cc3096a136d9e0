//! Member control laws driving the swarm onto the desired abstract state.

use nalgebra::{Matrix2, Vector2};
use serde::{Deserialize, Serialize};

use super::DesiredAbstract;
use crate::abstraction::{abstract_map, aux_state, ca_matrix, AbstractState, AuxAbstractState};
use crate::error::{Error, Result};
use crate::plant::{MemberKind, SwarmMember};

/// Variant of the double-integrator law.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiLaw {
    /// Mass-weighted damping `−k_sd·mᵢvᵢ` compensated by `k_sd·ȧ`; the
    /// abstract dynamics are met exactly.
    #[default]
    LocalDamping,
    /// Printed form with `C_a/S3` compensation and `(cᵢ + k_sd)Φ†ᵢȧ_d` feed-forward.
    AuxDamping,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SwarmGains {
    pub k: [f64; 2],
    pub k_p: [f64; 2],
    pub k_d: [f64; 2],
    pub k_sd: f64,
    pub di_law: DiLaw,
}

impl Default for SwarmGains {
    fn default() -> Self {
        Self {
            k: [10.0, 10.0],
            k_p: [10.0, 10.0],
            k_d: [5.0, 5.0],
            k_sd: 1.0,
            di_law: DiLaw::LocalDamping,
        }
    }
}

impl SwarmGains {
    pub fn validate(&self) -> Result<()> {
        let pos = |v: &[f64; 2]| v.iter().all(|&x| x > 0.0);
        if !pos(&self.k) || !pos(&self.k_p) || !pos(&self.k_d) || !(self.k_sd > 0.0) {
            return Err(Error::InvalidParameter(
                "swarm gains must be positive".into(),
            ));
        }
        Ok(())
    }

    fn kmat(v: &[f64; 2]) -> Matrix2<f64> {
        Matrix2::new(v[0], 0.0, 0.0, v[1])
    }
}

/// One-pole filtered backward difference, used for `ä_d`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AccelFilter {
    time_constant: f64,
    prev: Option<Vector2<f64>>,
    state: Vector2<f64>,
}

impl AccelFilter {
    pub fn new(time_constant: f64) -> Self {
        Self {
            time_constant,
            prev: None,
            state: Vector2::zeros(),
        }
    }

    pub fn value(&self) -> Vector2<f64> {
        self.state
    }

    pub fn update(&mut self, rate: Vector2<f64>, dt: f64) -> Vector2<f64> {
        if let Some(prev) = self.prev {
            let raw = (rate - prev) / dt;
            let k = dt / (self.time_constant + dt);
            self.state += (raw - self.state) * k;
        }
        self.prev = Some(rate);
        self.state
    }
}

/// Velocity command for a single-integrator member.
pub fn si_member_control(
    member: &SwarmMember,
    a: &AbstractState,
    aux: &AuxAbstractState,
    a_d: &DesiredAbstract,
    k: [f64; 2],
) -> Result<f64> {
    aux.ensure_regular()?;
    let x = SwarmGains::kmat(&k) * (a_d.pos() - a.pos()) + a_d.rate();
    Ok(aux.pinv_row(member.mass, member.position).dot(&x))
}

/// Force command for a double-integrator member. `c_a` is only read by
/// [`DiLaw::AuxDamping`].
pub fn di_member_control(
    member: &SwarmMember,
    a: &AbstractState,
    aux: &AuxAbstractState,
    c_a: &Matrix2<f64>,
    a_d: &DesiredAbstract,
    a_dd: Vector2<f64>,
    gains: &SwarmGains,
) -> Result<f64> {
    aux.ensure_regular()?;
    let (m, v) = (member.mass, member.velocity);
    let row = aux.pinv_row(m, member.position);
    let e = a_d.pos() - a.pos();
    let e_dot = a_d.rate() - a.rate();
    let phi_dot_p = Vector2::new(0.0, aux.phi_dot_p);
    let kp = SwarmGains::kmat(&gains.k_p);
    let kd = SwarmGains::kmat(&gains.k_d);
    Ok(match gains.di_law {
        DiLaw::LocalDamping => {
            let x = kp * e + kd * e_dot - phi_dot_p + a_dd + a.rate() * gains.k_sd;
            m * row.dot(&x) + member.damping * v - gains.k_sd * m * v
        }
        DiLaw::AuxDamping => {
            let x = kp * e + (kd - c_a / aux.s3) * e_dot - phi_dot_p + a_dd;
            m * row.dot(&x) + (member.damping + gains.k_sd) * row.dot(&a_d.rate()) - gains.k_sd * v
        }
    })
}

/// Inputs for every member, each by its own law.
pub fn heterogeneous_control(
    s: &[SwarmMember],
    a_d: &DesiredAbstract,
    a_dd: Vector2<f64>,
    gains: &SwarmGains,
) -> Result<Vec<f64>> {
    let a = abstract_map(s)?;
    let aux = aux_state(s)?;
    aux.ensure_regular()?;
    let c_a = match gains.di_law {
        DiLaw::AuxDamping => ca_matrix(s, &aux, gains.k_sd),
        DiLaw::LocalDamping => Matrix2::zeros(),
    };
    s.iter()
        .map(|m| match m.kind {
            MemberKind::Si => si_member_control(m, &a, &aux, a_d, gains.k),
            MemberKind::Di => di_member_control(m, &a, &aux, &c_a, a_d, a_dd, gains),
        })
        .collect()
}

/// Realized abstract acceleration `Φp̈ + Φ̇ṗ` for given inputs, with SI
/// members contributing through their commanded velocity.
pub fn abstract_accel(s: &[SwarmMember], u: &[f64]) -> Vector2<f64> {
    let mut acc = Vector2::zeros();
    for (m, &ui) in s.iter().zip(u) {
        let (v, p_dd) = match m.kind {
            MemberKind::Si => (ui, 0.0),
            MemberKind::Di => (m.velocity, (ui - m.damping * m.velocity) / m.mass),
        };
        acc[0] += m.mass * p_dd;
        acc[1] += 2.0 * m.mass * (v * v + m.position * p_dd);
    }
    acc
}
