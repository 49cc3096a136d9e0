//! Constraint-region atlas of the abstract state space.
//!
//! An abstract state `(M1, J_s)` is absolutely constrained when every swarm
//! configuration producing it keeps all members on the plane, partially
//! constrained when only some do, and unconstrained when none do. States
//! with no real preimage at all (`S0·J_s < M1²`) are reported as infeasible.
//!
//! For three or more members the preimage is connected, and the range of each
//! coordinate over it has a closed form, so the absolute label is exact.
//! Telling partial from unconstrained needs a witness inside the box, which
//! is searched for by sampling.

use std::io::{self, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::AtlasConfig;
use crate::control::ManifoldSpec;
use crate::error::{Error, Result};
use crate::parallel::{self, Execution};

/// Widest swarm accepted by [`map_hypercube_edges`].
pub const MAX_EDGE_MEMBERS: usize = 12;

/// Relative band around the box edge inside which a sampled miss is not trusted.
const UNCERTAIN_BAND: f64 = 1e-2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Label {
    #[serde(rename = "A_A")]
    Absolute,
    #[serde(rename = "A_P")]
    Partial,
    #[serde(rename = "A_U")]
    Unconstrained,
    #[serde(rename = "boundary_uncertain")]
    BoundaryUncertain,
    #[serde(rename = "infeasible")]
    Infeasible,
}

impl Label {
    pub fn as_str(&self) -> &'static str {
        match self {
            Label::Absolute => "A_A",
            Label::Partial => "A_P",
            Label::Unconstrained => "A_U",
            Label::BoundaryUncertain => "boundary_uncertain",
            Label::Infeasible => "infeasible",
        }
    }

    /// Infeasible states count as unconstrained.
    pub fn folded(self) -> Label {
        match self {
            Label::Infeasible => Label::Unconstrained,
            l => l,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub label: Label,
    pub confidence: f64,
    /// `L/2 − max |pᵢ|` over the preimage; positive iff absolutely constrained.
    pub margin: f64,
    /// Preimage points drawn (0 when the label is exact without sampling).
    pub samples: usize,
}

/// Range of coordinate `i` over the real preimage of `(m1, j_s)`, for three
/// or more members.
pub fn coordinate_range(m1: f64, j_s: f64, masses: &[f64], i: usize) -> Option<(f64, f64)> {
    let s: f64 = masses.iter().sum();
    let m = masses[i];
    let r = s - m;
    let disc = m1 * m1 + s * (r * j_s - m1 * m1) / m;
    if disc < 0.0 {
        return None;
    }
    let h = disc.sqrt();
    Some(((m1 - h) / s, (m1 + h) / s))
}

fn feasibility(m1: f64, j_s: f64, masses: &[f64]) -> Result<()> {
    let s: f64 = masses.iter().sum();
    let tol = 1e-12 * (s * j_s.abs()).max(m1 * m1).max(f64::MIN_POSITIVE);
    if !(j_s >= 0.0) || s * j_s - m1 * m1 < -tol {
        return Err(Error::EmptyPreimage { m1, j_s });
    }
    Ok(())
}

/// Real solutions `(x, y)` of `m_i x + m_j y = r1`, `m_i x² + m_j y² = r2`.
fn solve_pair(mi: f64, mj: f64, r1: f64, r2: f64) -> Option<[(f64, f64); 2]> {
    let disc = mi * mj * ((mi + mj) * r2 - r1 * r1);
    if disc < 0.0 {
        return None;
    }
    let h = disc.sqrt();
    let den = mi * (mi + mj);
    let x1 = (r1 * mi + h) / den;
    let x2 = (r1 * mi - h) / den;
    Some([(x1, (r1 - mi * x1) / mj), (x2, (r1 - mi * x2) / mj)])
}

/// Exact preimage of a two-member swarm.
pub fn two_member_preimage(m1: f64, j_s: f64, masses: [f64; 2]) -> Result<Vec<[f64; 2]>> {
    feasibility(m1, j_s, &masses)?;
    let r = solve_pair(masses[0], masses[1], m1, j_s.max(0.0))
        .unwrap_or([(m1 / (masses[0] + masses[1]), m1 / (masses[0] + masses[1])); 2]);
    let mut pts = vec![[r[0].0, r[0].1]];
    if r[1] != r[0] {
        pts.push([r[1].0, r[1].1]);
    }
    Ok(pts)
}

fn label_from_points(points: &[Vec<f64>], half: f64) -> Classification {
    let ext = |p: &Vec<f64>| p.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let inside = points.iter().filter(|p| ext(p) <= half).count();
    let worst = points.iter().map(ext).fold(0.0, f64::max);
    let label = match inside {
        n if n == points.len() => Label::Absolute,
        0 => Label::Unconstrained,
        _ => Label::Partial,
    };
    Classification {
        label,
        confidence: 1.0,
        margin: half - worst,
        samples: 0,
    }
}

fn exact_small(m1: f64, j_s: f64, masses: &[f64], l: f64) -> Result<Classification> {
    let half = 0.5 * l;
    match masses.len() {
        1 => {
            let p = m1 / masses[0];
            let scale = (masses[0] * j_s).max(m1 * m1).max(f64::MIN_POSITIVE);
            if (masses[0] * j_s - m1 * m1).abs() > 1e-12 * scale {
                return Err(Error::EmptyPreimage { m1, j_s });
            }
            Ok(label_from_points(&[vec![p]], half))
        }
        2 => {
            let pts = two_member_preimage(m1, j_s, [masses[0], masses[1]])?;
            let pts: Vec<Vec<f64>> = pts.iter().map(|p| p.to_vec()).collect();
            Ok(label_from_points(&pts, half))
        }
        _ => unreachable!(),
    }
}

/// Stable per-point seed.
pub fn point_seed(m1: f64, j_s: f64, seed: u64) -> u64 {
    let mix = |mut z: u64| {
        z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    };
    mix(mix(mix(seed) ^ m1.to_bits()) ^ j_s.to_bits())
}

/// Searches the preimage for an in-box point: free coordinates are drawn
/// uniformly in the box and a rotating pair is solved in closed form.
/// Returns `(hits, real_solutions, smallest excess over the box)`.
pub fn sample_preimage(
    m1: f64,
    j_s: f64,
    masses: &[f64],
    l: f64,
    budget: usize,
    seed: u64,
) -> (usize, usize, f64) {
    let n = masses.len();
    let half = 0.5 * l;
    let mut rng = ChaCha8Rng::seed_from_u64(point_seed(m1, j_s, seed));
    let (mut hits, mut real) = (0, 0);
    let mut best = f64::INFINITY;
    let mut q = vec![0.0; n];
    for k in 0..budget {
        let (i, j) = (k % n, (k + 1) % n);
        let (mut r1, mut r2, mut free_ext) = (m1, j_s, 0.0f64);
        for (idx, (&m, qk)) in masses.iter().zip(q.iter_mut()).enumerate() {
            if idx == i || idx == j {
                continue;
            }
            *qk = rng.random_range(-half..=half);
            r1 -= m * *qk;
            r2 -= m * *qk * *qk;
            free_ext = free_ext.max(qk.abs());
        }
        let Some(sols) = solve_pair(masses[i], masses[j], r1, r2) else {
            continue;
        };
        for (x, y) in sols {
            real += 1;
            let excess = free_ext.max(x.abs()).max(y.abs()) - half;
            best = best.min(excess);
            if excess <= 0.0 {
                hits += 1;
            }
        }
    }
    (hits, real, best)
}

/// Labels one abstract state. Returns [`Error::EmptyPreimage`] when no real
/// swarm configuration produces it.
pub fn classify_point(
    m1: f64,
    j_s: f64,
    masses: &[f64],
    l: f64,
    budget: usize,
    seed: u64,
) -> Result<Classification> {
    if masses.is_empty() {
        return Err(Error::EmptySwarm);
    }
    if masses.iter().any(|&m| !(m > 0.0)) || !(l > 0.0) {
        return Err(Error::InvalidParameter(
            "masses and L must be positive".into(),
        ));
    }
    feasibility(m1, j_s, masses)?;
    if masses.len() < 3 {
        return exact_small(m1, j_s, masses, l);
    }
    let half = 0.5 * l;
    let mut ext = 0.0f64;
    let mut excluded = false;
    for i in 0..masses.len() {
        let (lo, hi) = coordinate_range(m1, j_s.max(0.0), masses, i).unwrap_or((
            m1 / masses.iter().sum::<f64>(),
            m1 / masses.iter().sum::<f64>(),
        ));
        ext = ext.max(lo.abs()).max(hi.abs());
        excluded |= lo > half || hi < -half;
    }
    let margin = half - ext;
    if margin >= 0.0 {
        return Ok(Classification {
            label: Label::Absolute,
            confidence: 1.0,
            margin,
            samples: 0,
        });
    }
    if excluded {
        return Ok(Classification {
            label: Label::Unconstrained,
            confidence: 1.0,
            margin,
            samples: 0,
        });
    }
    let (hits, real, best) = sample_preimage(m1, j_s, masses, l, budget, seed);
    let c = if hits > 0 {
        Classification {
            label: Label::Partial,
            confidence: 1.0,
            margin,
            samples: real,
        }
    } else if best < UNCERTAIN_BAND * half {
        Classification {
            label: Label::BoundaryUncertain,
            confidence: 0.5,
            margin,
            samples: real,
        }
    } else {
        let confidence = if real == 0 {
            0.0
        } else {
            (1.0 - 3.0 / real as f64).max(0.0)
        };
        Classification {
            label: Label::Unconstrained,
            confidence,
            margin,
            samples: real,
        }
    };
    Ok(c)
}

/// Images of the edges of `[−L/2, L/2]^N`, one polyline per edge.
pub fn map_hypercube_edges(
    masses: &[f64],
    l: f64,
    samples_per_edge: usize,
) -> Result<Vec<Vec<[f64; 2]>>> {
    let n = masses.len();
    if n == 0 {
        return Err(Error::EmptySwarm);
    }
    if n > MAX_EDGE_MEMBERS {
        return Err(Error::InvalidParameter(format!(
            "edge map supports at most {MAX_EDGE_MEMBERS} members"
        )));
    }
    let half = 0.5 * l;
    let k = samples_per_edge.max(2);
    let mut lines = Vec::with_capacity(n << (n - 1));
    for axis in 0..n {
        for corner in 0u32..(1 << n) {
            if corner & (1 << axis) != 0 {
                continue;
            }
            let line = (0..k)
                .map(|s| {
                    let t = -half + l * s as f64 / (k - 1) as f64;
                    let (mut m1, mut js) = (0.0, 0.0);
                    for (i, &m) in masses.iter().enumerate() {
                        let p = if i == axis {
                            t
                        } else if corner & (1 << i) != 0 {
                            half
                        } else {
                            -half
                        };
                        m1 += m * p;
                        js += m * p * p;
                    }
                    [m1, js]
                })
                .collect();
            lines.push(line);
        }
    }
    Ok(lines)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AtlasCell {
    pub m1: f64,
    pub j_s: f64,
    pub label: Label,
    pub confidence: f64,
    pub margin: f64,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtlasHeader {
    pub name: String,
    pub masses: Vec<f64>,
    pub l: f64,
    pub seed: u64,
    pub budget: usize,
    pub m1_range: [f64; 2],
    pub j_range: [f64; 2],
    pub n_m1: usize,
    pub n_j: usize,
}

/// Cells are stored row-major with `M1` varying fastest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtlasGrid {
    pub header: AtlasHeader,
    pub cells: Vec<AtlasCell>,
}

impl AtlasGrid {
    pub fn cell(&self, i_m1: usize, i_j: usize) -> &AtlasCell {
        &self.cells[i_j * self.header.n_m1 + i_m1]
    }

    pub fn count(&self, label: Label) -> usize {
        self.cells.iter().filter(|c| c.label == label).count()
    }

    /// True when a 4-neighbour carries a different folded label.
    pub fn is_boundary(&self, i_m1: usize, i_j: usize) -> bool {
        let here = self.cell(i_m1, i_j).label.folded();
        let (n, m) = (self.header.n_m1 as isize, self.header.n_j as isize);
        [(-1, 0), (1, 0), (0, -1), (0, 1)].iter().any(|&(di, dj)| {
            let (a, b) = (i_m1 as isize + di, i_j as isize + dj);
            (0..n).contains(&a)
                && (0..m).contains(&b)
                && self.cell(a as usize, b as usize).label.folded() != here
        })
    }

    pub fn write_csv<W: Write>(&self, w: W) -> io::Result<()> {
        let mut w = io::BufWriter::new(w);
        writeln!(
            w,
            "# {}",
            serde_json::to_string(&self.header).map_err(io::Error::other)?
        )?;
        writeln!(w, "M1,J_s,label,confidence")?;
        for c in &self.cells {
            writeln!(
                w,
                "{},{},{},{}",
                c.m1,
                c.j_s,
                c.label.as_str(),
                c.confidence
            )?;
        }
        w.flush()
    }
}

/// Default `(M1, J_s)` window: the image of the box, padded by 5%.
pub fn default_ranges(masses: &[f64], l: f64) -> ([f64; 2], [f64; 2]) {
    let s: f64 = masses.iter().sum();
    let m = 1.05 * 0.5 * l * s;
    ([-m, m], [0.0, 1.05 * 0.25 * l * l * s])
}

pub fn build_atlas(cfg: &AtlasConfig, exec: Execution) -> Result<AtlasGrid> {
    cfg.validate()?;
    let (dm, dj) = default_ranges(&cfg.masses, cfg.l);
    let m1_range = cfg.grid.m1_range.unwrap_or(dm);
    let j_range = cfg.grid.j_range.unwrap_or(dj);
    let (n_m1, n_j) = (cfg.grid.n_m1, cfg.grid.n_j);
    let centre =
        |r: [f64; 2], k: usize, n: usize| r[0] + (k as f64 + 0.5) * (r[1] - r[0]) / n as f64;
    let points: Vec<(f64, f64)> = (0..n_j)
        .flat_map(|j| (0..n_m1).map(move |i| (i, j)))
        .map(|(i, j)| (centre(m1_range, i, n_m1), centre(j_range, j, n_j)))
        .collect();
    let cells = parallel::map(exec, &points, |&(m1, j_s)| {
        match classify_point(m1, j_s, &cfg.masses, cfg.l, cfg.budget, cfg.seed) {
            Ok(c) => Ok(AtlasCell {
                m1,
                j_s,
                label: c.label,
                confidence: c.confidence,
                margin: c.margin,
                samples: c.samples,
            }),
            Err(Error::EmptyPreimage { .. }) => Ok(AtlasCell {
                m1,
                j_s,
                label: Label::Infeasible,
                confidence: 1.0,
                margin: f64::NEG_INFINITY,
                samples: 0,
            }),
            Err(e) => Err(e),
        }
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    Ok(AtlasGrid {
        header: AtlasHeader {
            name: cfg.name.clone(),
            masses: cfg.masses.clone(),
            l: cfg.l,
            seed: cfg.seed,
            budget: cfg.budget,
            m1_range,
            j_range,
            n_m1,
            n_j,
        },
        cells,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ManifoldPoint {
    pub tau: f64,
    pub m1: f64,
    pub j_s: f64,
    pub label: Label,
    pub margin: f64,
    /// `S0·J_s − M1²`; zero where the swarm would be singular.
    pub spread: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifoldCertificate {
    pub pass: bool,
    /// Smallest box margin along the manifold.
    pub worst_margin: f64,
    pub worst_tau: f64,
    /// Largest `τ` such that every sampled point with `|τ'| ≤ τ` is certified.
    pub max_certified_tau: f64,
    pub points: Vec<ManifoldPoint>,
}

/// Classifies `n_tau` points of `J_s = quad·τ² + offset`, `M1 = τ/g`, for
/// `|τ| ≤ τ_max`. Passes iff every point is absolutely constrained with a
/// positive margin and a nonsingular spread.
pub fn certify_manifold(
    manifold: &ManifoldSpec,
    masses: &[f64],
    l: f64,
    g: f64,
    n_tau: usize,
    budget: usize,
    seed: u64,
) -> Result<ManifoldCertificate> {
    let s: f64 = masses.iter().sum();
    let n = n_tau.max(2);
    let mut points = Vec::with_capacity(n);
    for k in 0..n {
        let tau = -manifold.tau_max + 2.0 * manifold.tau_max * k as f64 / (n - 1) as f64;
        let (m1, j_s) = (tau / g, manifold.j_sd(tau));
        let spread = s * j_s - m1 * m1;
        let (label, margin) = match classify_point(m1, j_s, masses, l, budget, seed) {
            Ok(c) => (c.label, c.margin),
            Err(Error::EmptyPreimage { .. }) => (Label::Infeasible, f64::NEG_INFINITY),
            Err(e) => return Err(e),
        };
        points.push(ManifoldPoint {
            tau,
            m1,
            j_s,
            label,
            margin,
            spread,
        });
    }
    let ok = |p: &ManifoldPoint| {
        p.label == Label::Absolute
            && p.margin > 0.0
            && p.spread > 1e-12 * s * p.j_s.max(f64::MIN_POSITIVE)
    };
    let worst = points
        .iter()
        .min_by(|a, b| a.margin.total_cmp(&b.margin))
        .expect("nonempty");
    let mut bad: Vec<f64> = points
        .iter()
        .filter(|p| !ok(p))
        .map(|p| p.tau.abs())
        .collect();
    bad.sort_by(f64::total_cmp);
    let max_certified_tau = match bad.first() {
        None => manifold.tau_max,
        Some(&t) => points
            .iter()
            .filter(|p| p.tau.abs() < t)
            .map(|p| p.tau.abs())
            .fold(f64::NAN, f64::max),
    };
    Ok(ManifoldCertificate {
        pass: bad.is_empty(),
        worst_margin: worst.margin,
        worst_tau: worst.tau,
        max_certified_tau,
        points,
    })
}
