use serde::{Deserialize, Serialize};

use super::RunLog;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    /// First time after which `|e1|` stays below the settling tolerance.
    pub settling_time: Option<f64>,
    /// RMS of `e1` over the final half of the run.
    pub rms_e1_final_half: f64,
    pub max_abs_theta: f64,
    pub max_abs_position: f64,
    pub max_abs_e_tau: f64,
    pub max_abs_e_j: f64,
    pub final_abs_e_tau: f64,
    pub final_abs_e_j: f64,
    pub final_abs_e1: f64,
    /// Samples with a tilt or position violation.
    pub violation_count: usize,
    pub lambda_hat_final: Option<[f64; 4]>,
    pub lambda_hat_max_abs: Option<f64>,
    /// `max |pᵢ(t) − pᵢ(0)|`.
    pub max_displacement: f64,
    pub samples: usize,
    pub duration: f64,
    pub n_members: usize,
}

pub fn compute_metrics(log: &RunLog, settle_tol: f64) -> Metrics {
    let s = &log.samples;
    let amax =
        |f: &dyn Fn(&super::Sample) -> f64| s.iter().map(f).fold(0.0f64, |m, x| m.max(x.abs()));
    let last_out = s.iter().rposition(|x| x.e1().abs() >= settle_tol);
    let settling_time = match last_out {
        None => s.first().map(|x| x.t),
        Some(i) if i + 1 < s.len() => Some(s[i + 1].t),
        Some(_) => None,
    };
    let t_end = s.last().map_or(0.0, |x| x.t);
    let t_half = s.first().map_or(0.0, |x| x.t) + 0.5 * (t_end - s.first().map_or(0.0, |x| x.t));
    let tail: Vec<f64> = s.iter().filter(|x| x.t >= t_half).map(|x| x.e1()).collect();
    let rms = if tail.is_empty() {
        0.0
    } else {
        (tail.iter().map(|e| e * e).sum::<f64>() / tail.len() as f64).sqrt()
    };
    let p0 = s.first().map(|x| x.p.clone()).unwrap_or_default();
    let max_displacement = s
        .iter()
        .flat_map(|x| x.p.iter().zip(&p0).map(|(p, q)| (p - q).abs()))
        .fold(0.0, f64::max);
    let last = s.last();
    Metrics {
        settling_time,
        rms_e1_final_half: rms,
        max_abs_theta: amax(&|x| x.theta),
        max_abs_position: s
            .iter()
            .flat_map(|x| x.p.iter())
            .fold(0.0, |m, p| m.max(p.abs())),
        max_abs_e_tau: amax(&|x| x.e_tau),
        max_abs_e_j: amax(&|x| x.e_j),
        final_abs_e_tau: last.map_or(0.0, |x| x.e_tau.abs()),
        final_abs_e_j: last.map_or(0.0, |x| x.e_j.abs()),
        final_abs_e1: last.map_or(0.0, |x| x.e1().abs()),
        violation_count: s.iter().filter(|x| x.theta_flag || x.position_flag).count(),
        lambda_hat_final: last.and_then(|x| x.lambda_hat),
        lambda_hat_max_abs: log.adaptive.then(|| {
            s.iter()
                .filter_map(|x| x.lambda_hat)
                .flatten()
                .fold(0.0, |m: f64, v| m.max(v.abs()))
        }),
        max_displacement,
        samples: s.len(),
        duration: t_end,
        n_members: log.n_members,
    }
}
