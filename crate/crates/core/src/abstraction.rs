//! Abstract state of the swarm, auxiliary sums, and the abstraction Jacobian.
//!
//! The abstract state stores the mass moment `M1 = Σ mᵢpᵢ` rather than the
//! gravity torque `g·M1`; [`crate::plant::parent_accel`] applies `g`.

use nalgebra::{DMatrix, Matrix2, Vector2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::plant::SwarmMember;

/// Relative singularity threshold on `S3 / (S0·S2)`.
pub const SINGULAR_RTOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct AbstractState {
    pub m1: f64,
    pub j_s: f64,
    pub m1_dot: f64,
    pub j_s_dot: f64,
}

impl AbstractState {
    pub fn pos(&self) -> Vector2<f64> {
        Vector2::new(self.m1, self.j_s)
    }

    pub fn rate(&self) -> Vector2<f64> {
        Vector2::new(self.m1_dot, self.j_s_dot)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct AuxAbstractState {
    pub s0: f64,
    pub s1: f64,
    pub s2: f64,
    pub s3: f64,
    /// `Σ 2mᵢvᵢ²`, the second row of `Φ̇·ṗ`.
    pub phi_dot_p: f64,
}

impl AuxAbstractState {
    pub fn singular_threshold(&self) -> f64 {
        SINGULAR_RTOL * self.s0 * self.s2
    }

    pub fn is_singular(&self) -> bool {
        !(self.s3 > self.singular_threshold())
    }

    pub fn ensure_regular(&self) -> Result<()> {
        if self.is_singular() {
            Err(Error::SingularSwarm {
                s3: self.s3,
                threshold: self.singular_threshold(),
            })
        } else {
            Ok(())
        }
    }

    /// Row of `Φ†` for a member with mass `m` at position `p`.
    pub fn pinv_row(&self, m: f64, p: f64) -> Vector2<f64> {
        Vector2::new(
            m * (self.s2 - p * self.s1),
            0.5 * m * (p * self.s0 - self.s1),
        ) / self.s3
    }
}

pub fn abstract_map(s: &[SwarmMember]) -> Result<AbstractState> {
    if s.is_empty() {
        return Err(Error::EmptySwarm);
    }
    let mut a = AbstractState::default();
    for m in s {
        a.m1 += m.mass * m.position;
        a.j_s += m.mass * m.position * m.position;
        a.m1_dot += m.mass * m.velocity;
        a.j_s_dot += 2.0 * m.mass * m.position * m.velocity;
    }
    Ok(a)
}

/// Auxiliary sums. `S3` is evaluated as `S0·Σ mᵢ²(pᵢ − p̄)²`, which equals
/// `S0·S2 − S1²` without the cancellation.
pub fn aux_state(s: &[SwarmMember]) -> Result<AuxAbstractState> {
    if s.is_empty() {
        return Err(Error::EmptySwarm);
    }
    let (mut s0, mut s1, mut s2, mut q) = (0.0, 0.0, 0.0, 0.0);
    for m in s {
        let w = m.mass * m.mass;
        s0 += w;
        s1 += w * m.position;
        s2 += w * m.position * m.position;
        q += 2.0 * m.mass * m.velocity * m.velocity;
    }
    let mean = s1 / s0;
    let spread: f64 = s
        .iter()
        .map(|m| m.mass * m.mass * (m.position - mean).powi(2))
        .sum();
    Ok(AuxAbstractState {
        s0,
        s1,
        s2,
        s3: s0 * spread,
        phi_dot_p: q,
    })
}

/// Damping-coupling matrix over DI members, as printed (without the `1/S3` factor).
pub fn ca_matrix(s: &[SwarmMember], aux: &AuxAbstractState, k_sd: f64) -> Matrix2<f64> {
    let mut c = Matrix2::zeros();
    for m in s.iter().filter(|m| m.is_di()) {
        let w = m.mass * (k_sd + m.damping);
        let u = aux.s2 - m.position * aux.s1;
        let v = m.position * aux.s0 - aux.s1;
        c[(0, 0)] += w * u;
        c[(0, 1)] += 0.5 * w * v;
        c[(1, 0)] += 2.0 * w * m.position * u;
        c[(1, 1)] += w * m.position * v;
    }
    c
}

/// `Φ`, 2×N.
pub fn jacobian(s: &[SwarmMember]) -> DMatrix<f64> {
    DMatrix::from_fn(2, s.len(), |r, c| {
        let m = &s[c];
        if r == 0 {
            m.mass
        } else {
            2.0 * m.mass * m.position
        }
    })
}

/// Closed-form `Φ†`, N×2.
pub fn pinv_jacobian(aux: &AuxAbstractState, s: &[SwarmMember]) -> Result<DMatrix<f64>> {
    if s.is_empty() {
        return Err(Error::EmptySwarm);
    }
    aux.ensure_regular()?;
    let mut out = DMatrix::zeros(s.len(), 2);
    for (i, m) in s.iter().enumerate() {
        let row = aux.pinv_row(m.mass, m.position);
        out[(i, 0)] = row[0];
        out[(i, 1)] = row[1];
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn nominal_swarm() -> Vec<SwarmMember> {
        let m = [0.3552, 0.3532, 0.6762, 0.4596];
        let p = [0.125, -0.125, 0.125, -0.125];
        m.iter()
            .zip(p)
            .map(|(&m, p)| SwarmMember::si(m, p))
            .collect()
    }

    #[test]
    fn zero_configuration() {
        let s = vec![
            SwarmMember::si(1.0, 0.0),
            SwarmMember::di(2.0, 1.0, 0.0, 0.0),
        ];
        assert_eq!(abstract_map(&s).unwrap(), AbstractState::default());
    }

    #[test]
    fn nominal_initial_abstract_state() {
        let a = abstract_map(&nominal_swarm()).unwrap();
        let m1: f64 = 0.125 * (0.3552 - 0.3532 + 0.6762 - 0.4596);
        let js: f64 = 0.015625 * (0.3552 + 0.3532 + 0.6762 + 0.4596);
        assert_relative_eq!(a.m1, m1, epsilon = 1e-15);
        assert_relative_eq!(a.j_s, js, epsilon = 1e-15);
        assert!((a.m1 - 0.0273).abs() < 5e-4 && (a.j_s - 0.0288).abs() < 5e-4);
        assert_eq!(a.j_s_dot, 0.0);
    }

    #[test]
    fn two_robot_sums_and_rows() {
        let s = vec![SwarmMember::si(1.0, 1.0), SwarmMember::si(1.0, -1.0)];
        let aux = aux_state(&s).unwrap();
        assert_eq!((aux.s0, aux.s1, aux.s2), (2.0, 0.0, 2.0));
        assert_relative_eq!(aux.s3, 4.0);
        let pinv = pinv_jacobian(&aux, &s).unwrap();
        assert_relative_eq!(pinv[(0, 0)], 0.5);
        assert_relative_eq!(pinv[(0, 1)], 0.25);
        assert_relative_eq!(pinv[(1, 0)], 0.5);
        assert_relative_eq!(pinv[(1, 1)], -0.25);
        let prod = jacobian(&s) * pinv;
        assert_relative_eq!(prod, DMatrix::identity(2, 2), epsilon = 1e-14);
    }

    #[test]
    fn coincident_positions_are_singular() {
        let s = vec![
            SwarmMember::si(0.4, 0.2),
            SwarmMember::si(0.7, 0.2),
            SwarmMember::si(0.5, 0.2),
        ];
        let aux = aux_state(&s).unwrap();
        assert!(aux.s3 <= aux.singular_threshold());
        assert!(matches!(
            pinv_jacobian(&aux, &s),
            Err(Error::SingularSwarm { .. })
        ));
    }

    #[test]
    fn s3_identity() {
        let s = vec![
            SwarmMember::si(0.3, 0.41),
            SwarmMember::si(0.9, -0.2),
            SwarmMember::di(0.5, 1.0, 0.05, 0.0),
        ];
        let aux = aux_state(&s).unwrap();
        let mut pairwise = 0.0;
        for i in 0..s.len() {
            for j in i + 1..s.len() {
                pairwise +=
                    (s[i].mass * s[j].mass).powi(2) * (s[i].position - s[j].position).powi(2);
            }
        }
        assert_relative_eq!(
            aux.s3,
            aux.s0 * aux.s2 - aux.s1 * aux.s1,
            max_relative = 1e-12
        );
        assert_relative_eq!(aux.s3, pairwise, max_relative = 1e-12);
    }

    #[test]
    fn empty_swarm_rejected() {
        assert_eq!(abstract_map(&[]), Err(Error::EmptySwarm));
        assert_eq!(aux_state(&[]), Err(Error::EmptySwarm));
    }

    #[test]
    fn ca_matches_matrix_product() {
        for s in [
            vec![
                SwarmMember::di(1.0, 1.0, 0.3, 0.0),
                SwarmMember::di(1.0, 1.0, -0.3, 0.0),
            ],
            vec![
                SwarmMember::di(0.3552, 0.7290, 0.125, 0.1),
                SwarmMember::di(0.3532, 1.4133, -0.125, 0.0),
                SwarmMember::di(0.6762, 0.6524, 0.2, -0.2),
                SwarmMember::di(0.4596, 1.3258, -0.05, 0.0),
            ],
        ] {
            let aux = aux_state(&s).unwrap();
            let w = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
                s.len(),
                s.iter().map(|m| (1.0 + m.damping) / m.mass),
            ));
            let oracle = jacobian(&s) * w * pinv_jacobian(&aux, &s).unwrap() * aux.s3;
            let c = ca_matrix(&s, &aux, 1.0);
            for r in 0..2 {
                for k in 0..2 {
                    assert_relative_eq!(
                        c[(r, k)],
                        oracle[(r, k)],
                        epsilon = 1e-14,
                        max_relative = 1e-12
                    );
                }
            }
        }
    }
}
