//! LQR design for the linearized plane.
//!
//! The CARE is solved with the scaled matrix sign function of the Hamiltonian,
//! then polished with Newton–Kleinman iterations.

use nalgebra::{DMatrix, Matrix2, Vector2};
use serde::{Deserialize, Serialize};

use super::pd::PdGains;
use crate::error::{Error, Result};
use crate::plant::PhysicalParams;

const RESIDUAL_TOL: f64 = 1e-10;

/// Sign of the viscous entry in the linearization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DampingConvention {
    /// `−γ6/(J+J_sd0)`, from differentiating the plant.
    #[default]
    Physical,
    /// `+γ6/(J+J_sd0)`, as printed in the derivation.
    Printed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LqrDesign {
    pub gains: PdGains,
    pub p: Matrix2<f64>,
    pub a: Matrix2<f64>,
    pub b: Vector2<f64>,
    pub residual: f64,
}

/// `(A, B)` of the plane about the origin with `J_s` frozen at `j_sd0`.
pub fn linearize(
    params: &PhysicalParams,
    j_sd0: f64,
    conv: DampingConvention,
) -> Result<(Matrix2<f64>, Vector2<f64>)> {
    let inertia = params.j + j_sd0;
    if !(inertia > 0.0) {
        return Err(Error::NonPositiveInertia(inertia));
    }
    let damp = match conv {
        DampingConvention::Physical => -params.gamma[5] / inertia,
        DampingConvention::Printed => params.gamma[5] / inertia,
    };
    Ok((
        Matrix2::new(0.0, 1.0, 0.0, damp),
        Vector2::new(0.0, -1.0 / inertia),
    ))
}

pub fn lqr_design(
    params: &PhysicalParams,
    j_sd0: f64,
    q: &Matrix2<f64>,
    r: f64,
    conv: DampingConvention,
) -> Result<LqrDesign> {
    let (a, b) = linearize(params, j_sd0, conv)?;
    let ad = DMatrix::from_column_slice(2, 2, a.as_slice());
    let bd = DMatrix::from_column_slice(2, 1, b.as_slice());
    let qd = DMatrix::from_column_slice(2, 2, q.as_slice());
    let rd = DMatrix::from_element(1, 1, r);
    let (p, residual) = care(&ad, &bd, &qd, &rd)?;
    let k = (bd.transpose() * &p) / r;
    let p = Matrix2::from_column_slice(p.as_slice());
    // τ_sd enters through −1/(J+J_s), so the PD row is −K.
    Ok(LqrDesign {
        gains: PdGains {
            k1: -k[(0, 0)],
            k2: -k[(0, 1)],
        },
        p,
        a,
        b,
        residual,
    })
}

/// Stabilizing solution of `AᵀP + PA − PBR⁻¹BᵀP + Q = 0` and its relative residual.
pub fn care(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    q: &DMatrix<f64>,
    r: &DMatrix<f64>,
) -> Result<(DMatrix<f64>, f64)> {
    let n = a.nrows();
    if a.ncols() != n
        || b.nrows() != n
        || q.shape() != (n, n)
        || r.nrows() != r.ncols()
        || r.nrows() != b.ncols()
    {
        return Err(Error::RiccatiFailure("dimension mismatch".into()));
    }
    let r_chol = r
        .clone()
        .cholesky()
        .ok_or_else(|| Error::RiccatiFailure("R is not positive definite".into()))?;
    if q.symmetric_eigenvalues()
        .iter()
        .any(|&e| e < -1e-12 * q.norm().max(1.0))
    {
        return Err(Error::RiccatiFailure(
            "Q is not positive semidefinite".into(),
        ));
    }
    check_controllable(a, b)?;

    let r_inv = r_chol.inverse();
    let g = b * &r_inv * b.transpose();
    let mut h = DMatrix::zeros(2 * n, 2 * n);
    h.view_mut((0, 0), (n, n)).copy_from(a);
    h.view_mut((0, n), (n, n)).copy_from(&(-&g));
    h.view_mut((n, 0), (n, n)).copy_from(&(-q));
    h.view_mut((n, n), (n, n)).copy_from(&(-a.transpose()));

    let w = matrix_sign(&h)?;
    let ident = DMatrix::<f64>::identity(n, n);
    let mut lhs = DMatrix::zeros(2 * n, n);
    lhs.view_mut((0, 0), (n, n))
        .copy_from(&w.view((0, n), (n, n)));
    lhs.view_mut((n, 0), (n, n))
        .copy_from(&(w.view((n, n), (n, n)) + &ident));
    let mut rhs = DMatrix::zeros(2 * n, n);
    rhs.view_mut((0, 0), (n, n))
        .copy_from(&(-(w.view((0, 0), (n, n)) + &ident)));
    rhs.view_mut((n, 0), (n, n))
        .copy_from(&(-w.view((n, 0), (n, n))));
    let mut p = lhs
        .svd(true, true)
        .solve(&rhs, 1e-14)
        .map_err(|e| Error::RiccatiFailure(e.to_string()))?;
    p = (&p + p.transpose()) * 0.5;

    for _ in 0..20 {
        let k = &r_inv * b.transpose() * &p;
        let ac = a - b * &k;
        let rhs = -(q + k.transpose() * r * &k);
        let next = lyapunov(&ac, &rhs)?;
        let delta = (&next - &p).norm();
        p = next;
        if delta <= 1e-15 * p.norm().max(1.0) {
            break;
        }
    }

    let res = a.transpose() * &p + &p * a - &p * &g * &p + q;
    let scale = q.norm() + (a.transpose() * &p).norm() + (&p * &g * &p).norm();
    let residual = res.norm() / scale.max(f64::MIN_POSITIVE);
    if !residual.is_finite() || residual > RESIDUAL_TOL {
        return Err(Error::RiccatiFailure(format!(
            "relative residual {residual:e}"
        )));
    }
    let ac = a - &g * &p;
    if ac.complex_eigenvalues().iter().any(|e| e.re >= 0.0) {
        return Err(Error::RiccatiFailure("solution is not stabilizing".into()));
    }
    Ok((p, residual))
}

fn check_controllable(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<()> {
    let n = a.nrows();
    let m = b.ncols();
    let mut c = DMatrix::zeros(n, n * m);
    let mut blk = b.clone();
    for i in 0..n {
        c.view_mut((0, i * m), (n, m)).copy_from(&blk);
        blk = a * blk;
    }
    let sv = c.singular_values();
    let tol = 1e-12 * sv.max().max(1.0);
    if sv.iter().filter(|&&s| s > tol).count() < n {
        return Err(Error::RiccatiFailure("(A, B) is not controllable".into()));
    }
    Ok(())
}

fn matrix_sign(h: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let dim = h.nrows() as f64;
    let mut z = h.clone();
    for _ in 0..100 {
        let inv = z.clone().try_inverse().ok_or_else(|| {
            Error::RiccatiFailure("Hamiltonian has imaginary-axis eigenvalues".into())
        })?;
        let det = z.determinant().abs();
        let c = if det > 0.0 && det.is_finite() {
            det.powf(-1.0 / dim)
        } else {
            1.0
        };
        let next = (&z * c + inv / c) * 0.5;
        let delta = (&next - &z).norm();
        z = next;
        if delta <= 1e-14 * z.norm() {
            return Ok(z);
        }
    }
    Err(Error::RiccatiFailure(
        "sign iteration did not converge".into(),
    ))
}

/// Solves `AᵀX + XA = C` via the Kronecker form.
fn lyapunov(a: &DMatrix<f64>, c: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    let at = a.transpose();
    let ident = DMatrix::<f64>::identity(n, n);
    let big = ident.kronecker(&at) + at.kronecker(&ident);
    let rhs = DMatrix::from_column_slice(n * n, 1, c.as_slice());
    let x = big
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::RiccatiFailure("singular Lyapunov operator".into()))?;
    let x = DMatrix::from_column_slice(n, n, x.as_slice());
    Ok((&x + x.transpose()) * 0.5)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    /// Hand solution for A = [[0,1],[0,a]], B = [0,b], Q = diag(q1,q2).
    fn oracle(a: f64, b: f64, q1: f64, q2: f64, r: f64) -> (f64, f64) {
        let p2 = (q1 * r).sqrt() / b.abs();
        let bb = b * b / r;
        let p3 = (a + (a * a + bb * (2.0 * p2 + q2)).sqrt()) / bb;
        (b.abs() * p2 / r, b.abs() * p3 / r)
    }

    #[test]
    fn matches_hand_solution_both_conventions() {
        let params = PhysicalParams::default();
        let q = Matrix2::new(10.0, 0.0, 0.0, 1.0);
        for conv in [DampingConvention::Physical, DampingConvention::Printed] {
            let d = lqr_design(&params, 0.025, &q, 1.0, conv).unwrap();
            let (k1, k2) = oracle(d.a[(1, 1)], d.b[1], 10.0, 1.0, 1.0);
            assert_relative_eq!(d.gains.k1, k1, max_relative = 1e-10);
            assert_relative_eq!(d.gains.k2, k2, max_relative = 1e-10);
            assert!(d.residual < 1e-10);
        }
    }

    #[test]
    fn zero_rate_weight_first_gain() {
        let params = PhysicalParams::default();
        for qv in [1.0, 4.0, 10.0] {
            let q = Matrix2::new(qv, 0.0, 0.0, 0.0);
            let d = lqr_design(&params, 0.025, &q, 2.0, DampingConvention::Physical).unwrap();
            assert_relative_eq!(d.gains.k1, (qv / 2.0_f64).sqrt(), max_relative = 1e-9);
        }
    }

    #[test]
    fn heavy_input_penalty_shrinks_gains() {
        let params = PhysicalParams::default();
        let q = Matrix2::new(10.0, 0.0, 0.0, 1.0);
        let d = lqr_design(&params, 0.025, &q, 1e8, DampingConvention::Physical).unwrap();
        assert!(d.gains.k1.abs() < 1e-3 && d.gains.k2.abs() < 1e-3);
    }

    #[test]
    fn rejects_bad_weights() {
        let params = PhysicalParams::default();
        let q = Matrix2::new(10.0, 0.0, 0.0, 1.0);
        assert!(matches!(
            lqr_design(&params, 0.025, &q, 0.0, DampingConvention::Physical),
            Err(Error::RiccatiFailure(_))
        ));
        let neg = Matrix2::new(-1.0, 0.0, 0.0, 1.0);
        assert!(lqr_design(&params, 0.025, &neg, 1.0, DampingConvention::Physical).is_err());
    }

    #[test]
    fn uncontrollable_pair_rejected() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 2.0]);
        let b = DMatrix::from_row_slice(2, 1, &[1.0, 0.0]);
        let q = DMatrix::identity(2, 2);
        let r = DMatrix::identity(1, 1);
        assert!(matches!(
            care(&a, &b, &q, &r),
            Err(Error::RiccatiFailure(_))
        ));
    }
}
