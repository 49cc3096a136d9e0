//! Gain conditions and region-of-attraction estimates.

use nalgebra::Matrix4;
use serde::{Deserialize, Serialize};

use super::bounds::{
    jdot_max_bound, perturbation_constants, rho_e_inv, sample_path_bounds, KsSign, PathBounds,
    PerturbationConstants,
};
use super::StabilityReport;
use crate::control::{AriseGains, ManifoldSpec, PdGains, SwarmGains, TrajectorySpec};
use crate::plant::{Disturbance, PhysicalParams};

pub const EPS_GRID: usize = 10_000;

/// An `ε` satisfying the double-integrator inequalities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpsWitness {
    pub eps: f64,
    /// Smallest left-hand side over the four inequalities and both axes.
    pub margin: f64,
    /// Whether the Sylvester test on `[[εK_p, εK_d/2], [εK_d/2, K_d − εI]]` also holds.
    pub exact_holds: bool,
}

/// Left-hand sides of the four inequalities, minimized over both axes.
pub fn di_epsilon_margins(k_p: [f64; 2], k_d: [f64; 2], eps: f64) -> [f64; 4] {
    let mut out = [f64::INFINITY; 4];
    for i in 0..2 {
        let (kp, kd) = (k_p[i], k_d[i]);
        let lhs = [
            eps * kp + kd - eps,
            eps * kp * kd - eps * eps * kp - 0.25 * eps * kd * kd,
            kp + 1.0,
            kp - eps * eps,
        ];
        for (o, l) in out.iter_mut().zip(lhs) {
            *o = o.min(l);
        }
    }
    out
}

fn exact_negative_definite(k_p: [f64; 2], k_d: [f64; 2], eps: f64) -> bool {
    (0..2).all(|i| {
        let (kp, kd) = (k_p[i], k_d[i]);
        eps * kp > 0.0 && kd - eps > 0.0 && eps * kp * (kd - eps) - 0.25 * eps * eps * kd * kd > 0.0
    })
}

/// Grid search over `ε ∈ (0, min √k_pi)` for the `ε` with the largest
/// minimum margin; `None` if no grid point satisfies all four.
pub fn check_di_epsilon(k_p: [f64; 2], k_d: [f64; 2]) -> Option<EpsWitness> {
    let hi = k_p.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(hi > 0.0) || !hi.is_finite() {
        return None;
    }
    let hi = hi.sqrt();
    let mut best: Option<(f64, f64)> = None;
    for j in 1..=EPS_GRID {
        let eps = hi * j as f64 / (EPS_GRID + 1) as f64;
        let m = di_epsilon_margins(k_p, k_d, eps)
            .into_iter()
            .fold(f64::INFINITY, f64::min);
        if best.is_none_or(|(_, bm)| m > bm) {
            best = Some((eps, m));
        }
    }
    best.filter(|&(_, m)| m > 0.0)
        .map(|(eps, margin)| EpsWitness {
            eps,
            margin,
            exact_holds: exact_negative_definite(k_p, k_d, eps),
        })
}

/// `θ_max²/(2η)` with `η = max{floor, (J + J_sd,max)/2}`.
pub fn pd_region_sq_with(params: &PhysicalParams, manifold: &ManifoldSpec, floor: f64) -> f64 {
    let eta = floor.max(0.5 * (params.j + manifold.j_max()));
    params.theta_max.powi(2) / (2.0 * eta)
}

/// Region bound of the theorem statement, `η = max{1, ·}`.
pub fn pd_region_sq(params: &PhysicalParams, manifold: &ManifoldSpec) -> f64 {
    pd_region_sq_with(params, manifold, 1.0)
}

/// Region bound from the proof, `η = max{½, ·}`.
pub fn pd_region_sq_half(params: &PhysicalParams, manifold: &ManifoldSpec) -> f64 {
    pd_region_sq_with(params, manifold, 0.5)
}

pub(crate) fn check_swarm_gains(
    report: &mut StabilityReport,
    swarm: &SwarmGains,
    has_si: bool,
    has_di: bool,
) {
    if has_si {
        let m = swarm.k[0].min(swarm.k[1]);
        report.condition("swarm_gain_spd", m, &[("k_min", m)]);
    }
    if has_di {
        let w = check_di_epsilon(swarm.k_p, swarm.k_d);
        report.eps_witness = w;
        match w {
            Some(w) => report.condition(
                "di_epsilon",
                w.margin,
                &[("eps", w.eps), ("exact_holds", w.exact_holds as u8 as f64)],
            ),
            None => report.condition("di_epsilon", -1.0, &[]),
        }
    }
}

/// Inputs to the PD audit.
#[derive(Debug, Clone, Copy)]
pub struct PdAudit<'a> {
    pub params: &'a PhysicalParams,
    pub gains: &'a PdGains,
    pub swarm: &'a SwarmGains,
    pub manifold: &'a ManifoldSpec,
    pub has_si: bool,
    pub has_di: bool,
    pub z0_norm: f64,
    pub ks_sign: KsSign,
}

pub fn check_pd_conditions(a: &PdAudit<'_>, report: &mut StabilityReport) {
    let p = a.params;
    let k_s2 = a.swarm.k[1];
    let jdot_printed = jdot_max_bound(p, a.gains, k_s2, a.manifold, a.z0_norm, KsSign::Printed);
    let jdot_mag = jdot_max_bound(p, a.gains, k_s2, a.manifold, a.z0_norm, KsSign::Magnitude);
    let jdot = match a.ks_sign {
        KsSign::Printed => jdot_printed,
        KsSign::Magnitude => jdot_mag,
    };
    report.constants.insert("jdot_max".into(), jdot);
    report
        .constants
        .insert("jdot_max_printed_sign".into(), jdot_printed);
    report
        .constants
        .insert("jdot_max_magnitude".into(), jdot_mag);
    report.constants.insert("z0_norm".into(), a.z0_norm);

    report.condition(
        "theta_max_valid",
        std::f64::consts::FRAC_PI_2 - p.theta_max,
        &[("theta_max", p.theta_max)],
    );
    report.condition("k1_positive", a.gains.k1, &[("k1", a.gains.k1)]);
    let need = jdot / (2.0 * p.theta_max.cos());
    report.condition(
        "k2_damping",
        a.gains.k2 - need,
        &[("k2", a.gains.k2), ("required", need)],
    );
    check_swarm_gains(report, a.swarm, a.has_si, a.has_di);

    let r = pd_region_sq(p, a.manifold);
    let r_half = pd_region_sq_half(p, a.manifold);
    report.regions.insert("pd_region_sq".into(), r);
    report.regions.insert("pd_region_sq_half".into(), r_half);
    let z2 = a.z0_norm * a.z0_norm;
    report.condition(
        "initial_state_in_region",
        r - z2,
        &[("z0_norm_sq", z2), ("region_sq", r)],
    );
}

/// Inputs to the ARISE audit.
#[derive(Debug, Clone, Copy)]
pub struct AriseAudit<'a> {
    pub params: &'a PhysicalParams,
    pub gains: &'a AriseGains,
    pub swarm: &'a SwarmGains,
    pub manifold: &'a ManifoldSpec,
    pub traj: &'a TrajectorySpec,
    pub disturbance: &'a Disturbance,
    pub has_si: bool,
    pub has_di: bool,
    pub z0_norm: f64,
    pub samples: usize,
    pub safety: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AriseRegion {
    pub eta1: f64,
    pub eta2: f64,
    pub eta3: f64,
    /// Argument handed to `ρ_E⁻¹`.
    pub rho_argument: f64,
    pub rho: Option<f64>,
    /// `√(η1/η2)·ρ`, zero when `ρ` does not exist.
    pub radius: f64,
}

pub fn arise_region(a: &AriseAudit<'_>, c: &PerturbationConstants) -> AriseRegion {
    let g = a.gains;
    let gamma_inv = g.gamma.try_inverse().unwrap_or_else(Matrix4::zeros);
    let ev = gamma_inv.symmetric_eigenvalues();
    let (ev_min, ev_max) = (ev.min(), ev.max());
    let eta1 = 0.5 * 1f64.min(a.params.j + a.manifold.j_min()).min(ev_min);
    let eta2 = 0.5 * 2f64.max(a.params.j + a.manifold.j_max()).max(ev_max);
    let eta3 = (2.0 * g.alpha1 - 1.0).min(g.alpha2 - 1.0).min(1.0);
    let k_min = a.swarm.k[0].min(a.swarm.k[1]);
    let arg = 2.0 * eta3 - c.c_max / (2.0 * g.k_s) + 2.0 * k_min;
    let rho = rho_e_inv(a.swarm.k[0], g.alpha1, arg);
    let radius = rho.map_or(0.0, |r| (eta1 / eta2).sqrt() * r);
    AriseRegion {
        eta1,
        eta2,
        eta3,
        rho_argument: arg,
        rho,
        radius,
    }
}

pub fn check_arise_conditions(
    a: &AriseAudit<'_>,
    report: &mut StabilityReport,
) -> (PathBounds, PerturbationConstants, AriseRegion) {
    let g = a.gains;
    let path = sample_path_bounds(
        a.params,
        g,
        a.traj,
        a.disturbance,
        a.manifold,
        a.samples,
        a.safety,
    );
    let c = perturbation_constants(a.params, g, a.manifold, &path);
    let reg = arise_region(a, &c);

    report.condition(
        "theta_max_valid",
        std::f64::consts::FRAC_PI_2 - a.params.theta_max,
        &[("theta_max", a.params.theta_max)],
    );
    report.condition("alpha1_gt_half", g.alpha1 - 0.5, &[("alpha1", g.alpha1)]);
    report.condition("alpha2_gt_one", g.alpha2 - 1.0, &[("alpha2", g.alpha2)]);
    let beta_need = path.zeta_nd + path.zeta_nd_dot / g.alpha2;
    report.condition(
        "beta_bound",
        g.beta - beta_need,
        &[("beta", g.beta), ("required", beta_need)],
    );
    let ks_need = c.c_max / reg.eta3;
    let ks_need_loose = c.c_max / (4.0 * reg.eta3);
    report.condition(
        "ks_bound",
        g.k_s - ks_need,
        &[
            ("k_s", g.k_s),
            ("required", ks_need),
            ("required_quarter", ks_need_loose),
            ("margin_quarter", g.k_s - ks_need_loose),
        ],
    );
    let sym = (g.gamma - g.gamma.transpose()).norm();
    let gmin = g.gamma.symmetric_eigenvalues().min();
    report.condition(
        "gamma_spd",
        if sym <= 1e-12 * g.gamma.norm() {
            gmin
        } else {
            -sym
        },
        &[("lambda_min", gmin)],
    );
    check_swarm_gains(report, a.swarm, a.has_si, a.has_di);
    report.condition(
        "rho_invertible",
        reg.rho_argument - a.swarm.k[0],
        &[("argument", reg.rho_argument), ("floor", a.swarm.k[0])],
    );
    report.condition(
        "initial_state_in_region",
        reg.radius - a.z0_norm,
        &[("z0_norm", a.z0_norm), ("radius", reg.radius)],
    );

    for (k, v) in [
        ("tau_dot_max", path.tau_dot_max),
        ("tau_ddot_max", path.tau_ddot_max),
        ("ygy_max", path.ygy_max),
        ("zeta_nd", path.zeta_nd),
        ("zeta_nd_dot", path.zeta_nd_dot),
        ("c", c.c),
        ("jdot_max", c.jdot_max),
        ("jddot_max", c.jddot_max),
        ("c1", c.c1),
        ("c2", c.c2),
        ("c3", c.c3),
        ("c_max", c.c_max),
        ("eta1", reg.eta1),
        ("eta2", reg.eta2),
        ("eta3", reg.eta3),
        ("rho_argument", reg.rho_argument),
        ("z0_norm", a.z0_norm),
    ] {
        report.constants.insert(k.into(), v);
    }
    if let Some(r) = reg.rho {
        report.constants.insert("rho".into(), r);
    }
    report.regions.insert("arise_radius".into(), reg.radius);
    (path, c, reg)
}
