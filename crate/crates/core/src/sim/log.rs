use std::io::{self, Write};

use serde::Serialize;

/// One logged sample.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Sample {
    pub t: f64,
    pub theta: f64,
    pub omega: f64,
    pub theta_d: f64,
    pub p: Vec<f64>,
    pub v: Vec<f64>,
    pub tau_sd: f64,
    pub m1: f64,
    pub j_s: f64,
    pub j_s_dot: f64,
    pub m1_d: f64,
    pub j_sd: f64,
    /// `τ_sd − g·M1`.
    pub e_tau: f64,
    /// `J_sd − J_s`.
    pub e_j: f64,
    pub v_p: f64,
    pub v_p_energy: f64,
    pub v_a: f64,
    /// Nominal Lyapunov rate with the abstract error removed from the plane (PD only).
    pub vdot_nominal: f64,
    /// Rate contributed by the abstract error (PD only).
    pub vdot_coupling: f64,
    pub lambda_hat: Option<[f64; 4]>,
    pub theta_flag: bool,
    pub position_flag: bool,
    pub saturated: bool,
}

impl Sample {
    pub fn e1(&self) -> f64 {
        self.theta_d - self.theta
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunLog {
    pub n_members: usize,
    pub adaptive: bool,
    pub samples: Vec<Sample>,
}

impl RunLog {
    pub fn new(n_members: usize, adaptive: bool) -> Self {
        Self {
            n_members,
            adaptive,
            samples: Vec::new(),
        }
    }

    pub fn header(&self) -> Vec<String> {
        let mut h: Vec<String> = ["t", "theta", "omega", "theta_d"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        h.extend((0..self.n_members).map(|i| format!("p_{i}")));
        h.extend((0..self.n_members).map(|i| format!("v_{i}")));
        h.extend(
            ["tau_sd", "m1", "j_s", "e_tau", "e_j", "v_p", "v_a"]
                .iter()
                .map(|s| s.to_string()),
        );
        if self.adaptive {
            h.extend((0..4).map(|k| format!("lambda_hat_{k}")));
        }
        h.extend(
            [
                "theta_flag",
                "position_flag",
                "j_s_dot",
                "m1_d",
                "j_sd",
                "v_p_energy",
                "vdot_nominal",
                "vdot_coupling",
                "saturated",
            ]
            .iter()
            .map(|s| s.to_string()),
        );
        h
    }

    pub fn write_csv<W: Write>(&self, w: W) -> io::Result<()> {
        let mut w = io::BufWriter::new(w);
        writeln!(w, "{}", self.header().join(","))?;
        let mut row = String::new();
        for s in &self.samples {
            row.clear();
            let mut push = |x: f64| {
                if !row.is_empty() {
                    row.push(',');
                }
                row.push_str(&x.to_string());
            };
            for x in [s.t, s.theta, s.omega, s.theta_d] {
                push(x);
            }
            s.p.iter().chain(&s.v).for_each(|&x| push(x));
            for x in [s.tau_sd, s.m1, s.j_s, s.e_tau, s.e_j, s.v_p, s.v_a] {
                push(x);
            }
            if self.adaptive {
                s.lambda_hat
                    .unwrap_or([f64::NAN; 4])
                    .iter()
                    .for_each(|&x| push(x));
            }
            let flag = |b: bool| if b { 1.0 } else { 0.0 };
            for x in [
                flag(s.theta_flag),
                flag(s.position_flag),
                s.j_s_dot,
                s.m1_d,
                s.j_sd,
                s.v_p_energy,
                s.vdot_nominal,
                s.vdot_coupling,
                flag(s.saturated),
            ] {
                push(x);
            }
            writeln!(w, "{row}")?;
        }
        w.flush()
    }

    pub fn column(&self, f: impl Fn(&Sample) -> f64) -> Vec<f64> {
        self.samples.iter().map(f).collect()
    }
}
