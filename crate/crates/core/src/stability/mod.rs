//! Gain-condition auditors, bound calculators and Lyapunov monitors.
//!
//! [`audit`] evaluates every condition for the parent controller named in a
//! scenario and collects margins, constants and region estimates in a
//! [`StabilityReport`]. Values that differ from reference figures supplied in
//! the configuration are listed as discrepancies rather than failures.

pub mod bounds;
pub mod conditions;
pub mod monitor;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use bounds::{
    jdot_max_bound, perturbation_constants, rho_e, rho_e_inv, sample_path_bounds, KsSign,
    PathBounds, PerturbationConstants, RateBoundTerms,
};
pub use conditions::{
    arise_region, check_arise_conditions, check_di_epsilon, check_pd_conditions,
    di_epsilon_margins, pd_region_sq, pd_region_sq_half, AriseAudit, AriseRegion, EpsWitness,
    PdAudit,
};
pub use monitor::{decomposition_fraction, lyapunov_monitor, MonitorReport, SwarmLyapunov};

use crate::config::{ParentSpec, ScenarioConfig};
use crate::error::{Error, Result};
use crate::plant::MemberKind;
use crate::sim::{ParentChoice, Simulation};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionResult {
    pub pass: bool,
    /// Positive when the condition holds.
    pub margin: f64,
    pub values: BTreeMap<String, f64>,
}

/// A computed value that disagrees with a reference figure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Discrepancy {
    pub quantity: String,
    pub computed: f64,
    pub reference: f64,
    pub relative: f64,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub scenario: String,
    pub controller: String,
    pub conditions: BTreeMap<String, ConditionResult>,
    pub constants: BTreeMap<String, f64>,
    pub regions: BTreeMap<String, f64>,
    pub eps_witness: Option<EpsWitness>,
    pub discrepancies: Vec<Discrepancy>,
    pub advisories: Vec<String>,
    pub all_pass: bool,
}

impl StabilityReport {
    pub fn new(scenario: &str, controller: &str) -> Self {
        Self {
            scenario: scenario.into(),
            controller: controller.into(),
            conditions: BTreeMap::new(),
            constants: BTreeMap::new(),
            regions: BTreeMap::new(),
            eps_witness: None,
            discrepancies: Vec::new(),
            advisories: Vec::new(),
            all_pass: true,
        }
    }

    /// Records a condition; it passes iff `margin` is strictly positive.
    pub fn condition(&mut self, name: &str, margin: f64, values: &[(&str, f64)]) {
        let pass = margin > 0.0;
        self.all_pass &= pass;
        let values = values.iter().map(|(k, v)| (k.to_string(), *v)).collect();
        self.conditions.insert(
            name.into(),
            ConditionResult {
                pass,
                margin,
                values,
            },
        );
    }

    pub fn failed(&self) -> Vec<&str> {
        self.conditions
            .iter()
            .filter(|(_, c)| !c.pass)
            .map(|(k, _)| k.as_str())
            .collect()
    }

    fn compare(
        &mut self,
        quantity: &str,
        computed: f64,
        reference: Option<f64>,
        tol: f64,
        note: &str,
    ) {
        let Some(reference) = reference else { return };
        let relative = if reference == 0.0 {
            computed.abs()
        } else {
            (computed - reference).abs() / reference.abs()
        };
        if !(relative <= tol) {
            self.discrepancies.push(Discrepancy {
                quantity: quantity.into(),
                computed,
                reference,
                relative,
                note: note.into(),
            });
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Initial error vector for the audit: `(θ, ω, M1, J_s)` under PD and
/// `(e1, e2, r, λ̃, M1, J_s)` under ARISE.
pub fn initial_error_vector(cfg: &ScenarioConfig) -> Result<Vec<f64>> {
    if let Some(z) = &cfg.stability.z0 {
        return Ok(z.clone());
    }
    let mut sim = Simulation::new(cfg.resolve()?)?;
    let info = sim.control()?;
    let (m1, j) = (info.a.m1, info.a.j_s);
    Ok(match &sim.scenario().parent {
        ParentChoice::Pd(_) => vec![info.x.theta, info.x.omega, m1, j],
        ParentChoice::Arise(_) => {
            let o = info.arise.expect("arise output");
            let lt = crate::control::arise::true_lambda(&sim.scenario().params) - o.lambda_hat;
            vec![o.e1, o.e2, o.r, lt[0], lt[1], lt[2], lt[3], m1, j]
        }
    })
}

/// Audits the scenario's parent controller and swarm gains.
pub fn audit(cfg: &ScenarioConfig) -> Result<StabilityReport> {
    let sc = cfg.resolve()?;
    let z0 = initial_error_vector(cfg)?;
    if z0.iter().any(|x| !x.is_finite()) {
        return Err(Error::Config("stability.z0 must be finite".into()));
    }
    let z0_norm = z0.iter().map(|x| x * x).sum::<f64>().sqrt();
    let has_si = sc.roster.iter().any(|m| m.kind == MemberKind::Si);
    let has_di = sc.roster.iter().any(|m| m.kind == MemberKind::Di);
    let reference = cfg.stability.reference.clone().unwrap_or_default();
    let controller = match cfg.parent {
        ParentSpec::Pd(_) => "pd",
        ParentSpec::Arise(_) => "arise",
    };
    let mut report = StabilityReport::new(&sc.name, controller);

    match &sc.parent {
        ParentChoice::Pd(gains) => {
            let a = PdAudit {
                params: &sc.params,
                gains,
                swarm: &sc.swarm_gains,
                manifold: &sc.manifold,
                has_si,
                has_di,
                z0_norm,
                ks_sign: cfg.stability.ks_sign,
            };
            check_pd_conditions(&a, &mut report);
            let jd = report.constants["jdot_max"];
            let jd_printed = report.constants["jdot_max_printed_sign"];
            report.compare(
                "jdot_max",
                jd,
                reference.jdot_max,
                0.05,
                "rate bound under the configured K_s2 sign",
            );
            report.compare(
                "jdot_max_printed_sign",
                jd_printed,
                reference.jdot_max,
                0.05,
                "rate bound with K_s2 subtracted as printed",
            );
            let r = report.regions["pd_region_sq"];
            let r_half = report.regions["pd_region_sq_half"];
            report.compare(
                "pd_region_sq",
                r,
                reference.pd_region_sq,
                1e-3,
                "eta = max{1, (J + J_sd,max)/2}",
            );
            report.compare(
                "pd_region_sq_half",
                r_half,
                reference.pd_region_sq,
                1e-3,
                "eta = max{1/2, (J + J_sd,max)/2}",
            );
            report.compare(
                "k1",
                gains.k1,
                reference.k1,
                1e-3,
                "configured proportional gain",
            );
            report.compare(
                "k2",
                gains.k2,
                reference.k2,
                1e-3,
                "configured damping gain",
            );
        }
        ParentChoice::Arise(gains) => {
            let a = AriseAudit {
                params: &sc.params,
                gains,
                swarm: &sc.swarm_gains,
                manifold: &sc.manifold,
                traj: &sc.trajectory,
                disturbance: &sc.disturbance,
                has_si,
                has_di,
                z0_norm,
                samples: cfg.stability.zeta_samples,
                safety: cfg.stability.zeta_safety,
            };
            let (_, _, region) = check_arise_conditions(&a, &mut report);
            report.compare(
                "arise_radius",
                region.radius,
                reference.arise_region,
                0.10,
                "constrained region radius",
            );
            if region.rho.is_none() {
                let e = Error::NonInvertibleRhoE {
                    argument: region.rho_argument,
                    floor: sc.swarm_gains.k[0],
                };
                report.advisories.push(e.to_string());
            }
        }
    }
    if !sc.params.stribeck_ordering_holds() {
        report.advisories.push(format!(
            "friction coefficients have gamma4 = {} > gamma1 = {}",
            sc.params.gamma[3], sc.params.gamma[0]
        ));
    }
    Ok(report)
}
