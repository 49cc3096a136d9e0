//! JSON configuration for scenarios and atlas jobs.
//!
//! Files carry a `schema` tag. Dotted-key overrides (`a.b.0.c=value`) are
//! applied to the raw JSON before typed parsing, so every field can be
//! overridden from the command line.

use std::path::Path;
use std::str::FromStr;

use nalgebra::{Matrix2, Matrix4, Vector4};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::control::arise::true_lambda;
use crate::control::{
    lqr_design, AriseGains, DampingConvention, ManifoldSpec, PdGains, SwarmGains, TrajectorySpec,
};
use crate::error::{Error, Result};
use crate::plant::{Disturbance, MemberKind, ParentState, PhysicalParams, SwarmMember};
use crate::sim::{ParentChoice, Scenario};
use crate::stability::KsSign;

pub const SCENARIO_SCHEMA: &str = "swarmabs/scenario/v1";
pub const ATLAS_SCHEMA: &str = "swarmabs/atlas/v1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub schema: String,
    #[serde(default)]
    pub name: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub params: PhysicalParams,
    pub swarm: RosterSpec,
    pub parent: ParentSpec,
    #[serde(default)]
    pub swarm_gains: SwarmGains,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub manifold: Option<ManifoldSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trajectory: Option<TrajectorySpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub disturbance: Option<Disturbance>,
    #[serde(default)]
    pub initial: ParentState,
    #[serde(default)]
    pub integration: IntegrationSpec,
    #[serde(default)]
    pub stability: StabilitySpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RosterSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub members: Option<Vec<SwarmMember>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generate: Option<GenerateSpec>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Composition {
    Si,
    Di,
    /// First half SI, second half DI.
    Hetero,
}

/// Random roster: uniform masses and dampings, positions alternating `±d`
/// with `d` chosen so the initial swarm inertia equals `j_s0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenerateSpec {
    pub count: usize,
    pub composition: Composition,
    #[serde(default = "default_mass_range")]
    pub mass_range: [f64; 2],
    #[serde(default = "default_damping_range")]
    pub damping_range: [f64; 2],
    #[serde(default = "default_js0")]
    pub j_s0: f64,
}

fn default_mass_range() -> [f64; 2] {
    [0.25, 0.75]
}
fn default_damping_range() -> [f64; 2] {
    [0.5, 1.5]
}
fn default_js0() -> f64 {
    0.0288
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum ParentSpec {
    Pd(PdSpec),
    Arise(AriseSpec),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PdSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lqr: Option<LqrSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LqrSpec {
    pub q: [[f64; 2]; 2],
    pub r: f64,
    #[serde(default = "default_jsd0")]
    pub j_sd0: f64,
    #[serde(default)]
    pub damping: DampingConvention,
}

fn default_jsd0() -> f64 {
    0.025
}

impl Default for LqrSpec {
    fn default() -> Self {
        Self {
            q: [[10.0, 0.0], [0.0, 1.0]],
            r: 1.0,
            j_sd0: 0.025,
            damping: DampingConvention::Physical,
        }
    }
}

impl LqrSpec {
    pub fn q_matrix(&self) -> Matrix2<f64> {
        Matrix2::new(self.q[0][0], self.q[0][1], self.q[1][0], self.q[1][1])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GammaSpec {
    Diag([f64; 4]),
    Full([[f64; 4]; 4]),
}

impl GammaSpec {
    pub fn matrix(&self) -> Matrix4<f64> {
        match self {
            GammaSpec::Diag(d) => Matrix4::from_diagonal(&Vector4::from_column_slice(d)),
            GammaSpec::Full(m) => Matrix4::from_fn(|r, c| m[r][c]),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AriseSpec {
    pub alpha1: f64,
    pub alpha2: f64,
    pub k_s: f64,
    pub beta: f64,
    pub gamma: GammaSpec,
    /// Estimates of γ2, γ3, γ5; default to the plant values.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma_bar: Option<[f64; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda_hat0: Option<[f64; 4]>,
    /// Initial estimation error `λ − λ̂(0)`, used when `lambda_hat0` is absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda_tilde0: Option<[f64; 4]>,
    #[serde(default)]
    pub sgn_boundary: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegrationSpec {
    #[serde(default = "default_dt")]
    pub dt: f64,
    /// Defaults to 15 s under PD and 200 s under ARISE.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub duration: Option<f64>,
    #[serde(default = "default_decimation")]
    pub decimation: usize,
    #[serde(default = "default_settle_tol")]
    pub settle_tol: f64,
    #[serde(default)]
    pub hard_stop: bool,
    /// Time constant of the `ä_d` filter; defaults to `10·dt`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub accel_filter_tc: Option<f64>,
}

fn default_dt() -> f64 {
    1e-3
}
fn default_decimation() -> usize {
    10
}
fn default_settle_tol() -> f64 {
    0.005
}

impl Default for IntegrationSpec {
    fn default() -> Self {
        Self {
            dt: default_dt(),
            duration: None,
            decimation: default_decimation(),
            settle_tol: default_settle_tol(),
            hard_stop: false,
            accel_filter_tc: None,
        }
    }
}

/// Inputs to the stability audit that are not part of the closed loop.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StabilitySpec {
    /// Initial error vector for region membership; computed from the
    /// initial state when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z0: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<ReferenceValues>,
    #[serde(default)]
    pub ks_sign: KsSign,
    #[serde(default = "default_zeta_samples")]
    pub zeta_samples: usize,
    #[serde(default = "default_zeta_safety")]
    pub zeta_safety: f64,
}

fn default_zeta_samples() -> usize {
    10_000
}
fn default_zeta_safety() -> f64 {
    1.1
}

impl Default for StabilitySpec {
    fn default() -> Self {
        Self {
            z0: None,
            reference: None,
            ks_sign: KsSign::default(),
            zeta_samples: default_zeta_samples(),
            zeta_safety: default_zeta_safety(),
        }
    }
}

/// Published values to compare against; mismatches become flagged discrepancies.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceValues {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jdot_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pd_region_sq: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub arise_region: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k2: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub axis: String,
    pub values: Vec<f64>,
}

/// Axis of a sweep: `size`, `seed`, or `gain:<dotted.key>`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SweepAxis {
    Size,
    Seed,
    Gain(String),
}

impl FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "size" => Ok(SweepAxis::Size),
            "seed" => Ok(SweepAxis::Seed),
            _ => match s.strip_prefix("gain:") {
                Some(k) if !k.is_empty() => Ok(SweepAxis::Gain(k.to_string())),
                _ => Err(Error::Config(format!(
                    "unknown sweep axis `{s}` (use size, seed or gain:<key>)"
                ))),
            },
        }
    }
}

impl SweepAxis {
    pub fn key(&self) -> &str {
        match self {
            SweepAxis::Size => "swarm.generate.count",
            SweepAxis::Seed => "seed",
            SweepAxis::Gain(k) => k,
        }
    }

    /// JSON value placed at [`SweepAxis::key`].
    pub fn value(&self, x: f64) -> Value {
        match self {
            SweepAxis::Size | SweepAxis::Seed => Value::from(x.round() as u64),
            SweepAxis::Gain(_) => Value::from(x),
        }
    }
}

/// Sets `key` (dotted, numeric segments index arrays) in a JSON tree.
/// `raw` is parsed as JSON when possible, otherwise taken as a string.
pub fn apply_override(root: &mut Value, key: &str, raw: &str) -> Result<()> {
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    set_path(root, key, value)
}

pub fn set_path(root: &mut Value, key: &str, value: Value) -> Result<()> {
    if key.is_empty() {
        return Err(Error::Config("empty override key".into()));
    }
    let mut cur = root;
    let parts: Vec<&str> = key.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        let last = i + 1 == parts.len();
        cur = match cur {
            Value::Array(items) => {
                let idx: usize = part.parse().map_err(|_| {
                    Error::Config(format!("override `{key}`: `{part}` is not an array index"))
                })?;
                let len = items.len();
                items.get_mut(idx).ok_or_else(|| {
                    Error::Config(format!(
                        "override `{key}`: index {idx} out of range ({len})"
                    ))
                })?
            }
            Value::Object(map) => {
                if last {
                    map.insert(part.to_string(), value);
                    return Ok(());
                }
                map.entry(part.to_string())
                    .or_insert_with(|| Value::Object(Default::default()))
            }
            _ => {
                return Err(Error::Config(format!(
                    "override `{key}`: `{part}` has no parent object"
                )))
            }
        };
        if last {
            *cur = value;
            return Ok(());
        }
    }
    unreachable!()
}

pub fn read_json(path: &Path) -> Result<Value> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

fn check_schema(v: &Value, expected: &str) -> Result<()> {
    match v.get("schema").and_then(Value::as_str) {
        Some(s) if s == expected => Ok(()),
        Some(s) => Err(Error::Config(format!(
            "schema `{s}` does not match `{expected}`"
        ))),
        None => Err(Error::Config("missing field `schema`".into())),
    }
}

pub fn schema_of(v: &Value) -> Option<&str> {
    v.get("schema").and_then(Value::as_str)
}

impl ScenarioConfig {
    pub fn from_value(v: Value) -> Result<Self> {
        check_schema(&v, SCENARIO_SCHEMA)?;
        let cfg: Self = serde_json::from_value(v).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path, overrides: &[(String, String)]) -> Result<Self> {
        let mut v = read_json(path)?;
        for (k, raw) in overrides {
            apply_override(&mut v, k, raw)?;
        }
        Self::from_value(v)
    }

    pub fn to_value(&self) -> Value {
        serde_json::to_value(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        self.resolve().map(|_| ())
    }

    pub fn manifold(&self) -> ManifoldSpec {
        self.manifold.unwrap_or(ManifoldSpec {
            tau_max: self.params.tau_max,
            ..ManifoldSpec::default()
        })
    }

    pub fn roster(&self) -> Result<Vec<SwarmMember>> {
        let spec = &self.swarm;
        let members = match (&spec.members, &spec.generate) {
            (Some(m), None) => m.clone(),
            (None, Some(g)) => generate_roster(g, self.seed)?,
            (Some(_), Some(_)) => {
                return Err(Error::Config(
                    "swarm: give either `members` or `generate`, not both".into(),
                ))
            }
            (None, None) => return Err(Error::Config("swarm: missing field `members`".into())),
        };
        if members.is_empty() {
            return Err(Error::Config("swarm: roster is empty".into()));
        }
        for (i, m) in members.iter().enumerate() {
            m.validate()
                .map_err(|e| Error::Config(format!("swarm.members.{i}: {e}")))?;
            if !m.within_box(&self.params) {
                return Err(Error::Config(format!(
                    "swarm.members.{i}: position {} outside the plane",
                    m.position
                )));
            }
        }
        Ok(members)
    }

    pub fn pd_gains(&self) -> Result<Option<PdGains>> {
        let ParentSpec::Pd(pd) = &self.parent else {
            return Ok(None);
        };
        match (pd.k1, pd.k2, &pd.lqr) {
            (Some(k1), Some(k2), None) => Ok(Some(PdGains { k1, k2 })),
            (None, None, Some(l)) => {
                let d = lqr_design(&self.params, l.j_sd0, &l.q_matrix(), l.r, l.damping)?;
                Ok(Some(d.gains))
            }
            _ => Err(Error::Config(
                "parent: PD needs either both `k1` and `k2` or an `lqr` block".into(),
            )),
        }
    }

    pub fn arise_gains(&self) -> Result<Option<AriseGains>> {
        let ParentSpec::Arise(a) = &self.parent else {
            return Ok(None);
        };
        let truth = true_lambda(&self.params);
        let lambda_hat0 = match (a.lambda_hat0, a.lambda_tilde0) {
            (Some(l), _) => Vector4::from_column_slice(&l),
            (None, Some(d)) => truth - Vector4::from_column_slice(&d),
            (None, None) => truth,
        };
        let gains = AriseGains {
            alpha1: a.alpha1,
            alpha2: a.alpha2,
            k_s: a.k_s,
            beta: a.beta,
            gamma: a.gamma.matrix(),
            gamma_bar: a.gamma_bar.unwrap_or([
                self.params.gamma[1],
                self.params.gamma[2],
                self.params.gamma[4],
            ]),
            lambda_hat0,
            sgn_boundary: a.sgn_boundary,
        };
        gains.validate()?;
        Ok(Some(gains))
    }

    pub fn resolve(&self) -> Result<Scenario> {
        if self.schema != SCENARIO_SCHEMA {
            return Err(Error::Config(format!(
                "schema `{}` does not match `{SCENARIO_SCHEMA}`",
                self.schema
            )));
        }
        let cfg_err = |e: Error| match e {
            Error::Config(_) => e,
            other => Error::Config(other.to_string()),
        };
        self.params.validate().map_err(cfg_err)?;
        let manifold = self.manifold();
        manifold.validate().map_err(cfg_err)?;
        self.swarm_gains.validate().map_err(cfg_err)?;
        let roster = self.roster()?;
        let parent = match (
            self.pd_gains().map_err(cfg_err)?,
            self.arise_gains().map_err(cfg_err)?,
        ) {
            (Some(g), None) => ParentChoice::Pd(g),
            (None, Some(g)) => ParentChoice::Arise(g),
            _ => unreachable!(),
        };
        let it = &self.integration;
        if !(it.dt > 0.0) {
            return Err(Error::Config("integration.dt must be positive".into()));
        }
        let duration = it.duration.unwrap_or(match parent {
            ParentChoice::Pd(_) => 15.0,
            ParentChoice::Arise(_) => 200.0,
        });
        if !(duration >= it.dt) {
            return Err(Error::Config(
                "integration.duration must be at least dt".into(),
            ));
        }
        if it.decimation == 0 {
            return Err(Error::Config(
                "integration.decimation must be at least 1".into(),
            ));
        }
        let accel_filter_tc = it.accel_filter_tc.unwrap_or(10.0 * it.dt);
        if !(accel_filter_tc >= 0.0) {
            return Err(Error::Config(
                "integration.accel_filter_tc must be nonnegative".into(),
            ));
        }
        Ok(Scenario {
            name: self.name.clone(),
            seed: self.seed,
            params: self.params,
            roster,
            parent,
            swarm_gains: self.swarm_gains,
            manifold,
            trajectory: self.trajectory.unwrap_or_default(),
            disturbance: self.disturbance.unwrap_or_default(),
            initial: self.initial,
            dt: it.dt,
            duration,
            decimation: it.decimation,
            settle_tol: it.settle_tol,
            hard_stop: it.hard_stop,
            accel_filter_tc,
        })
    }
}

pub fn generate_roster(g: &GenerateSpec, seed: u64) -> Result<Vec<SwarmMember>> {
    if g.count < 2 {
        return Err(Error::Config(
            "swarm.generate.count must be at least 2".into(),
        ));
    }
    let ok = |r: &[f64; 2]| r[0] > 0.0 && r[1] >= r[0];
    if !ok(&g.mass_range) || !ok(&g.damping_range) || !(g.j_s0 > 0.0) {
        return Err(Error::Config(
            "swarm.generate: ranges must be positive and ordered, j_s0 positive".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draw = |rng: &mut ChaCha8Rng, r: &[f64; 2]| {
        if r[1] > r[0] {
            rng.random_range(r[0]..r[1])
        } else {
            r[0]
        }
    };
    let mut out = Vec::with_capacity(g.count);
    for i in 0..g.count {
        let mass = draw(&mut rng, &g.mass_range);
        let damping = draw(&mut rng, &g.damping_range);
        let kind = match g.composition {
            Composition::Si => MemberKind::Si,
            Composition::Di => MemberKind::Di,
            Composition::Hetero if i < g.count / 2 => MemberKind::Si,
            Composition::Hetero => MemberKind::Di,
        };
        let damping = if kind == MemberKind::Di { damping } else { 0.0 };
        out.push(SwarmMember {
            kind,
            mass,
            damping,
            position: 0.0,
            velocity: 0.0,
        });
    }
    let total: f64 = out.iter().map(|m| m.mass).sum();
    let d = (g.j_s0 / total).sqrt();
    for (i, m) in out.iter_mut().enumerate() {
        m.position = if i % 2 == 0 { d } else { -d };
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub n_m1: usize,
    pub n_j: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m1_range: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub j_range: Option<[f64; 2]>,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            n_m1: 50,
            n_j: 50,
            m1_range: None,
            j_range: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtlasConfig {
    pub schema: String,
    #[serde(default)]
    pub name: String,
    #[serde(default)]
    pub seed: u64,
    pub masses: Vec<f64>,
    #[serde(default = "default_length")]
    pub l: f64,
    #[serde(default = "default_g")]
    pub g: f64,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default = "default_budget")]
    pub budget: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub manifold: Option<ManifoldSpec>,
    #[serde(default = "default_n_tau")]
    pub n_tau: usize,
    #[serde(default = "default_edge_samples")]
    pub samples_per_edge: usize,
}

fn default_length() -> f64 {
    1.0
}
fn default_g() -> f64 {
    9.81
}
fn default_budget() -> usize {
    20_000
}
fn default_n_tau() -> usize {
    201
}
fn default_edge_samples() -> usize {
    16
}

impl AtlasConfig {
    pub fn from_value(v: Value) -> Result<Self> {
        check_schema(&v, ATLAS_SCHEMA)?;
        let cfg: Self = serde_json::from_value(v).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path, overrides: &[(String, String)]) -> Result<Self> {
        let mut v = read_json(path)?;
        for (k, raw) in overrides {
            apply_override(&mut v, k, raw)?;
        }
        Self::from_value(v)
    }

    pub fn validate(&self) -> Result<()> {
        if self.masses.is_empty() {
            return Err(Error::Config("masses: swarm is empty".into()));
        }
        if self.masses.iter().any(|&m| !(m > 0.0)) {
            return Err(Error::Config("masses: every mass must be positive".into()));
        }
        if !(self.l > 0.0) || !(self.g > 0.0) {
            return Err(Error::Config("l and g must be positive".into()));
        }
        if self.grid.n_m1 == 0 || self.grid.n_j == 0 || self.budget == 0 {
            return Err(Error::Config(
                "grid sizes and budget must be positive".into(),
            ));
        }
        if let Some(m) = &self.manifold {
            m.validate().map_err(|e| Error::Config(e.to_string()))?;
        }
        Ok(())
    }

    pub fn manifold(&self) -> ManifoldSpec {
        self.manifold.unwrap_or_default()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn minimal() -> Value {
        json!({
            "schema": SCENARIO_SCHEMA,
            "swarm": {"members": [
                {"kind": "si", "mass": 0.3552, "position": 0.125},
                {"kind": "si", "mass": 0.3532, "position": -0.125}
            ]},
            "parent": {"type": "pd", "k1": 3.1623, "k2": 3.2859}
        })
    }

    #[test]
    fn minimal_config_parses_with_defaults() {
        let cfg = ScenarioConfig::from_value(minimal()).unwrap();
        let sc = cfg.resolve().unwrap();
        assert_eq!(sc.duration, 15.0);
        assert_eq!(sc.dt, 1e-3);
        assert_eq!(sc.manifold, ManifoldSpec::default());
    }

    #[test]
    fn missing_mass_names_the_key() {
        let mut v = minimal();
        v["swarm"]["members"][0]
            .as_object_mut()
            .unwrap()
            .remove("mass");
        let err = ScenarioConfig::from_value(v).unwrap_err();
        assert!(
            matches!(&err, Error::Config(m) if m.contains("mass")),
            "{err}"
        );
    }

    #[test]
    fn overrides_reach_nested_and_indexed_keys() {
        let mut v = minimal();
        apply_override(&mut v, "parent.k2", "4.5").unwrap();
        apply_override(&mut v, "swarm.members.1.position", "-0.2").unwrap();
        apply_override(&mut v, "integration.duration", "2").unwrap();
        apply_override(&mut v, "name", "renamed").unwrap();
        let cfg = ScenarioConfig::from_value(v).unwrap();
        assert_eq!(cfg.name, "renamed");
        assert_eq!(cfg.pd_gains().unwrap().unwrap().k2, 4.5);
        assert_eq!(cfg.roster().unwrap()[1].position, -0.2);
        assert_eq!(cfg.resolve().unwrap().duration, 2.0);
        assert!(apply_override(&mut minimal(), "swarm.members.9.mass", "1").is_err());
    }

    #[test]
    fn round_trip_is_identity() {
        let cfg = ScenarioConfig::from_value(minimal()).unwrap();
        let again = ScenarioConfig::from_value(cfg.to_value()).unwrap();
        assert_eq!(cfg, again);
    }

    #[test]
    fn schema_mismatch_rejected() {
        let mut v = minimal();
        v["schema"] = json!("other/v9");
        assert!(matches!(
            ScenarioConfig::from_value(v),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn generated_roster_hits_target_inertia() {
        let g = GenerateSpec {
            count: 20,
            composition: Composition::Hetero,
            mass_range: default_mass_range(),
            damping_range: default_damping_range(),
            j_s0: 0.0288,
        };
        let r = generate_roster(&g, 3).unwrap();
        let js: f64 = r.iter().map(|m| m.mass * m.position * m.position).sum();
        assert!((js - 0.0288).abs() < 1e-12);
        assert_eq!(r.iter().filter(|m| m.is_di()).count(), 10);
        assert!(r.iter().all(|m| (0.25..0.75).contains(&m.mass)));
        assert_eq!(r, generate_roster(&g, 3).unwrap());
    }

    #[test]
    fn sweep_axis_parsing() {
        assert_eq!("size".parse::<SweepAxis>().unwrap(), SweepAxis::Size);
        assert_eq!(
            "gain:parent.k_s".parse::<SweepAxis>().unwrap(),
            SweepAxis::Gain("parent.k_s".into())
        );
        assert!("gain:".parse::<SweepAxis>().is_err());
    }
}
