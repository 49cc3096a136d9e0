use std::fs::{self, File};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use swarmabs::atlas::{build_atlas, certify_manifold, map_hypercube_edges, MAX_EDGE_MEMBERS};
use swarmabs::config::{
    apply_override, read_json, AtlasConfig, LqrSpec, ParentSpec, ScenarioConfig, SweepAxis,
};
use swarmabs::control::lqr::{lqr_design, DampingConvention};
use swarmabs::parallel::{set_threads, Execution};
use swarmabs::sim::{run_scenario, sweep};
use swarmabs::stability::{audit, StabilityReport};
use swarmabs::Error;

const EXIT_IO: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_DIVERGENCE: u8 = 3;
const EXIT_STRICT: u8 = 4;

#[derive(Parser, Debug)]
#[command(
    name = "swarmabs",
    version,
    about = "Swarm-actuated tilting plane: simulation, atlas and stability audits"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run a scenario and write run.csv, metrics.json and stability_report.json.
    Simulate(Common),
    /// Classify abstract states and certify the manifold.
    Atlas(Common),
    /// Design PD gains by LQR about the origin.
    DesignLqr(Common),
    /// Audit the stability conditions of a scenario.
    CheckStability(Common),
    /// Run a scenario along its sweep axis.
    Sweep(Common),
}

#[derive(Args, Debug)]
struct Common {
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    #[arg(long, value_name = "DIR", default_value = "out")]
    out: PathBuf,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Dotted-key override, e.g. `parent.k2=4.0`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", value_parser = parse_override)]
    overrides: Vec<(String, String)>,
    /// Exit with status 4 when any stability condition fails.
    #[arg(long)]
    strict_stability: bool,
    #[arg(long, value_name = "N")]
    threads: Option<usize>,
}

fn parse_override(s: &str) -> Result<(String, String), String> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| format!("`{s}` is not KEY=VALUE"))?;
    Ok((k.trim().to_string(), v.to_string()))
}

#[derive(Debug)]
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Config(_) | Error::InvalidParameter(_) => EXIT_CONFIG,
            _ => EXIT_DIVERGENCE,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure {
            code: EXIT_IO,
            message: e.to_string(),
        }
    }
}

fn config_failure(e: Error) -> Failure {
    Failure {
        code: EXIT_CONFIG,
        message: e.to_string(),
    }
}

impl Common {
    fn overrides(&self) -> Vec<(String, String)> {
        let mut o = self.overrides.clone();
        if let Some(s) = self.seed {
            o.push(("seed".into(), s.to_string()));
        }
        o
    }

    fn template(&self) -> Result<Value, Failure> {
        let mut v = read_json(&self.config).map_err(config_failure)?;
        for (k, raw) in self.overrides() {
            apply_override(&mut v, &k, &raw).map_err(config_failure)?;
        }
        Ok(v)
    }

    fn scenario(&self) -> Result<ScenarioConfig, Failure> {
        ScenarioConfig::load(&self.config, &self.overrides()).map_err(config_failure)
    }

    fn out_file(&self, name: &str) -> Result<PathBuf, Failure> {
        fs::create_dir_all(&self.out)?;
        Ok(self.out.join(name))
    }
}

fn write_json(path: &Path, v: &impl serde::Serialize) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(v).map_err(|e| Failure {
        code: EXIT_IO,
        message: e.to_string(),
    })?;
    fs::write(path, text + "\n")?;
    Ok(())
}

fn audit_and_write(c: &Common, cfg: &ScenarioConfig) -> Result<StabilityReport, Failure> {
    let report = audit(cfg).map_err(config_failure)?;
    write_json(&c.out_file("stability_report.json")?, &report)?;
    let failed = report.failed();
    if failed.is_empty() {
        eprintln!("stability: all {} conditions pass", report.conditions.len());
    } else {
        eprintln!("stability: failed {}", failed.join(", "));
    }
    for d in &report.discrepancies {
        eprintln!(
            "stability: {} = {:.6} differs from reference {:.6} ({})",
            d.quantity, d.computed, d.reference, d.note
        );
    }
    Ok(report)
}

fn strict_check(c: &Common, report: &StabilityReport) -> Result<(), Failure> {
    if c.strict_stability && !report.all_pass {
        return Err(Failure {
            code: EXIT_STRICT,
            message: format!("strict stability: {}", report.failed().join(", ")),
        });
    }
    Ok(())
}

fn simulate(c: &Common) -> Result<(), Failure> {
    let cfg = c.scenario()?;
    let report = audit_and_write(c, &cfg)?;
    strict_check(c, &report)?;
    let out = run_scenario(cfg.resolve().map_err(config_failure)?)?;
    out.log.write_csv(File::create(c.out_file("run.csv")?)?)?;
    write_json(&c.out_file("metrics.json")?, &out.metrics)?;
    let m = &out.metrics;
    eprintln!(
        "simulate: {} samples, settling {:?}, rms e1 {:.3e}, violations {}",
        m.samples, m.settling_time, m.rms_e1_final_half, m.violation_count
    );
    Ok(())
}

fn atlas(c: &Common) -> Result<(), Failure> {
    let cfg = AtlasConfig::load(&c.config, &c.overrides()).map_err(config_failure)?;
    let grid = build_atlas(&cfg, Execution::default())?;
    grid.write_csv(File::create(c.out_file("atlas.csv")?)?)?;
    if cfg.masses.len() <= MAX_EDGE_MEMBERS {
        let lines = map_hypercube_edges(&cfg.masses, cfg.l, cfg.samples_per_edge)?;
        let mut text = String::from("edge,M1,J_s\n");
        for (i, line) in lines.iter().enumerate() {
            for p in line {
                text.push_str(&format!("{i},{},{}\n", p[0], p[1]));
            }
        }
        fs::write(c.out_file("edges.csv")?, text)?;
    } else {
        eprintln!("atlas: edges.csv skipped for more than {MAX_EDGE_MEMBERS} members");
    }
    let cert = certify_manifold(
        &cfg.manifold(),
        &cfg.masses,
        cfg.l,
        cfg.g,
        cfg.n_tau,
        cfg.budget,
        cfg.seed,
    )?;
    write_json(&c.out_file("manifold_cert.json")?, &cert)?;
    eprintln!(
        "atlas: {} cells; manifold {} (worst margin {:.4} at tau {:.3}, certified up to |tau| = {:.3})",
        grid.cells.len(),
        if cert.pass { "certified" } else { "not certified" },
        cert.worst_margin,
        cert.worst_tau,
        cert.max_certified_tau
    );
    Ok(())
}

fn design_lqr(c: &Common) -> Result<(), Failure> {
    let cfg = c.scenario()?;
    let spec = match &cfg.parent {
        ParentSpec::Pd(p) => p.lqr.clone().unwrap_or_default(),
        ParentSpec::Arise(_) => LqrSpec::default(),
    };
    let design = |conv| lqr_design(&cfg.params, spec.j_sd0, &spec.q_matrix(), spec.r, conv);
    let d = design(spec.damping)?;
    let other = match spec.damping {
        DampingConvention::Physical => DampingConvention::Printed,
        DampingConvention::Printed => DampingConvention::Physical,
    };
    let alt = design(other)?;
    let out = json!({
        "k1": d.gains.k1,
        "k2": d.gains.k2,
        "damping": spec.damping,
        "q": spec.q,
        "r": spec.r,
        "j_sd0": spec.j_sd0,
        "riccati": [[d.p[(0, 0)], d.p[(0, 1)]], [d.p[(1, 0)], d.p[(1, 1)]]],
        "residual": d.residual,
        "alternative": {"damping": other, "k1": alt.gains.k1, "k2": alt.gains.k2},
    });
    write_json(&c.out_file("lqr_gains.json")?, &out)?;
    eprintln!(
        "design-lqr: k1 = {:.4}, k2 = {:.4} ({:?})",
        d.gains.k1, d.gains.k2, spec.damping
    );
    Ok(())
}

fn check_stability(c: &Common) -> Result<(), Failure> {
    let cfg = c.scenario()?;
    let report = audit_and_write(c, &cfg)?;
    strict_check(c, &report)
}

fn run_sweep(c: &Common) -> Result<(), Failure> {
    let template = c.template()?;
    let cfg = ScenarioConfig::from_value(template.clone()).map_err(config_failure)?;
    let spec = cfg
        .sweep
        .clone()
        .ok_or_else(|| config_failure(Error::Config("sweep: missing `sweep` block".into())))?;
    let axis = SweepAxis::from_str(&spec.axis).map_err(config_failure)?;
    let rows = sweep(&template, &axis, &spec.values, Execution::default());
    write_json(&c.out_file("sweep.json")?, &rows)?;
    let mut text = String::from("value,settling_time,rms_e1_final_half,max_abs_theta,max_displacement,violation_count,error\n");
    for r in &rows {
        match &r.metrics {
            Some(m) => text.push_str(&format!(
                "{},{},{},{},{},{},\n",
                r.value,
                m.settling_time.map_or(String::new(), |t| t.to_string()),
                m.rms_e1_final_half,
                m.max_abs_theta,
                m.max_displacement,
                m.violation_count
            )),
            None => text.push_str(&format!(
                "{},,,,,,\"{}\"\n",
                r.value,
                r.error.clone().unwrap_or_default().replace('"', "'")
            )),
        }
    }
    fs::write(c.out_file("sweep.csv")?, text)?;
    let failed = rows.iter().filter(|r| r.error.is_some()).count();
    eprintln!(
        "sweep: {} runs along {}, {} failed",
        rows.len(),
        spec.axis,
        failed
    );
    if failed > 0 {
        return Err(Failure {
            code: EXIT_DIVERGENCE,
            message: format!("{failed} sweep runs failed"),
        });
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let common = match &cli.command {
        Command::Simulate(c)
        | Command::Atlas(c)
        | Command::DesignLqr(c)
        | Command::CheckStability(c)
        | Command::Sweep(c) => c,
    };
    if let Some(n) = common.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(EXIT_CONFIG);
        }
        if !set_threads(n) {
            eprintln!("warning: --threads ignored (worker pool unavailable)");
        }
    }
    let result = match &cli.command {
        Command::Simulate(c) => simulate(c),
        Command::Atlas(c) => atlas(c),
        Command::DesignLqr(c) => design_lqr(c),
        Command::CheckStability(c) => check_stability(c),
        Command::Sweep(c) => run_sweep(c),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
