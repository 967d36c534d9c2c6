use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use sha2::{Digest, Sha256};

use loggas::config::{ConstantsOptions, SimulationConfig};
use loggas::constants::{constants_report, ConstantsReport, GammaChoice, RadiusSearch, ReportOptions};
use loggas::dynamics::{initial_ensemble, simulate, SimulationError, Trajectory};
use loggas::equilibrium::{EquilibriumDensity, EquilibriumSpec, Family};
use loggas::functionals::entropy_density;
use loggas::io;
use loggas::verifier::{verify_convergence, Location, Status, VerificationReport};
use loggas::{Error, Potential};

#[derive(Parser)]
#[command(name = "loggas", version, about = "Log-gas gradient-flow simulator and verification harness")]
struct Cli {
    /// Worker threads for the interaction sums; results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Moment bounds, HWI constants and certified rates.
    Constants(ConstantsArgs),
    /// Closed-form equilibrium measure: parameters, density grid, quantile samples.
    Equilibrium(EquilibriumArgs),
    /// Integrate the particle system and write a trajectory directory.
    Simulate(SimulateArgs),
    /// Check a trajectory directory against the constants.
    Verify(VerifyArgs),
    /// constants, equilibrium, simulate and verify for one config.
    Pipeline(PipelineArgs),
}

#[derive(Args)]
struct PotentialArgs {
    /// V(x) = x^4/4 + c x^2/2.
    #[arg(long, conflicts_with = "quartic_nonconfining", requires = "c")]
    quartic_confining: bool,
    /// V(x) = g x^4/4 + x^2/2 with g <= 0.
    #[arg(long, requires = "g")]
    quartic_nonconfining: bool,
    /// Quadratic coefficient of the confining quartic.
    #[arg(short = 'c', allow_negative_numbers = true, requires = "quartic_confining")]
    c: Option<f64>,
    /// Quartic coefficient of the non-confining quartic.
    #[arg(short = 'g', allow_negative_numbers = true, requires = "quartic_nonconfining")]
    g: Option<f64>,
}

impl PotentialArgs {
    fn potential(&self) -> Option<Result<Potential, Error>> {
        match (self.c, self.g) {
            (Some(c), _) => Some(Potential::quartic_confining(c)),
            (_, Some(g)) => Some(Potential::quartic_nonconfining(g)),
            _ => None,
        }
    }
}

#[derive(Args)]
struct ConstantsArgs {
    #[command(flatten)]
    potential: PotentialArgs,
    /// Simulation config supplying the potential and the initial ensemble.
    #[arg(long, conflicts_with_all = ["quartic_confining", "quartic_nonconfining"])]
    config: Option<PathBuf>,
    /// Initial second moment (default: from the config's initial ensemble, else 0).
    #[arg(long)]
    m2_init: Option<f64>,
    /// Initial support half-width (default: from the config's initial ensemble, else 1).
    #[arg(long = "support-m")]
    m: Option<f64>,
    /// Use gamma = 1/(2r^2) instead of 1/(4r^2).
    #[arg(long)]
    sharp_gamma: bool,
    /// Lower end of the radius search (default: sqrt(-c/3) for c < 0).
    #[arg(long)]
    r0: Option<f64>,
    /// Upper end of the radius search.
    #[arg(long)]
    r_max: Option<f64>,
    /// Also write constants.json and a manifest here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EquilibriumArgs {
    #[command(flatten)]
    potential: PotentialArgs,
    /// Simulation config; its target (or the equilibrium of its potential) is used.
    #[arg(long, conflicts_with_all = ["quartic_confining", "quartic_nonconfining"])]
    config: Option<PathBuf>,
    /// Number of midpoint-quantile samples to emit.
    #[arg(long, default_value_t = 0)]
    samples: usize,
    /// Number of points of the uniform density grid written to density.csv.
    #[arg(long, default_value_t = 0)]
    grid: usize,
    /// Also write equilibrium.json, density.csv, samples.csv and a manifest here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    /// Simulation config (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Trajectory directory to write.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct VerifyArgs {
    /// Trajectory directory written by `simulate`.
    #[arg(long)]
    traj: PathBuf,
    /// Constants report JSON (default: recomputed from the trajectory's config).
    #[arg(long)]
    constants: Option<PathBuf>,
    /// Output directory (default: <traj>/verify).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PipelineArgs {
    /// Simulation config (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Directory receiving every artifact.
    #[arg(long)]
    out: PathBuf,
}

/// Failure classes mapped to exit codes.
enum Failure {
    Config(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_config_error() {
            Failure::Config(e.to_string())
        } else {
            Failure::Runtime(e.to_string())
        }
    }
}

type Outcome = Result<bool, Failure>;

#[derive(Serialize)]
struct Manifest {
    subcommand: String,
    config_path: Option<String>,
    out_dir: String,
    version: String,
    wall_time_s: f64,
    /// SHA-256 of every input file, keyed by path.
    inputs: BTreeMap<String, String>,
}

fn sha256_file(path: &Path) -> Result<String, Error> {
    let bytes = std::fs::read(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut s = String::with_capacity(64);
    for b in Sha256::digest(&bytes) {
        let _ = write!(s, "{b:02x}");
    }
    Ok(s)
}

fn write_manifest(
    out: &Path,
    subcommand: &str,
    config: Option<&Path>,
    inputs: &[&Path],
    start: Instant,
) -> Result<(), Error> {
    let mut hashes = BTreeMap::new();
    for p in inputs {
        hashes.insert(p.display().to_string(), sha256_file(p)?);
    }
    let m = Manifest {
        subcommand: subcommand.to_string(),
        config_path: config.map(|p| p.display().to_string()),
        out_dir: out.display().to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        wall_time_s: start.elapsed().as_secs_f64(),
        inputs: hashes,
    };
    io::write_json(&out.join("manifest.json"), &m)
}

fn create_dir(dir: &Path) -> Result<(), Error> {
    std::fs::create_dir_all(dir).map_err(|source| Error::Io {
        path: dir.to_path_buf(),
        source,
    })
}

fn print_json<T: Serialize>(value: &T) {
    let text = serde_json::to_string_pretty(value).expect("serializable");
    let _ = writeln!(std::io::stdout().lock(), "{text}");
}

fn build_constants(cfg: &SimulationConfig) -> Result<ConstantsReport, Error> {
    let init = initial_ensemble(&cfg.init, cfg.n, cfg.seed)?;
    constants_report(&cfg.potential, cfg.constants.report_options(&init)?)
}

fn run_constants(a: &ConstantsArgs, start: Instant) -> Outcome {
    let (v, mut opts) = match (&a.config, a.potential.potential()) {
        (Some(path), _) => {
            let cfg = SimulationConfig::load(path)?;
            let init = initial_ensemble(&cfg.init, cfg.n, cfg.seed)?;
            let opts = cfg.constants.report_options(&init)?;
            (cfg.potential, opts)
        }
        (None, Some(v)) => {
            let d = ConstantsOptions::default();
            (
                v?,
                ReportOptions {
                    m2_init: d.m2_init.unwrap_or(0.0),
                    m: d.m.unwrap_or(1.0),
                    search: RadiusSearch {
                        r0: d.r0,
                        r_max: d.r_max,
                        gamma: GammaChoice::Quarter,
                    },
                },
            )
        }
        (None, None) => {
            return Err(Failure::Config(
                "give --config or one of --quartic-confining -c C / --quartic-nonconfining -g G".into(),
            ))
        }
    };
    if let Some(m2) = a.m2_init {
        opts.m2_init = m2;
    }
    if let Some(m) = a.m {
        opts.m = m;
    }
    if a.sharp_gamma {
        opts.search.gamma = GammaChoice::Sharp;
    }
    if a.r0.is_some() {
        opts.search.r0 = a.r0;
    }
    if let Some(r) = a.r_max {
        opts.search.r_max = r;
    }
    let report = constants_report(&v, opts)?;
    print_json(&report);
    if let Some(out) = &a.out {
        create_dir(out)?;
        io::write_json(&out.join("constants.json"), &report)?;
        let inputs: Vec<&Path> = a.config.iter().map(|p| p.as_path()).collect();
        write_manifest(out, "constants", a.config.as_deref(), &inputs, start)?;
    }
    Ok(true)
}

#[derive(Serialize)]
struct EquilibriumSummary {
    spec: EquilibriumSpec,
    parameters: Family,
    support: [f64; 2],
    normalization: f64,
    min_polynomial_factor: f64,
    entropy: f64,
    samples: Vec<f64>,
}

fn equilibrium_summary(eq: &EquilibriumDensity, samples: usize) -> Result<EquilibriumSummary, Error> {
    let a = eq.half_width();
    Ok(EquilibriumSummary {
        spec: eq.spec(),
        parameters: eq.family(),
        support: [-a, a],
        normalization: eq.normalization(),
        min_polynomial_factor: eq.min_polynomial_factor(),
        entropy: entropy_density(eq, &eq.potential())?,
        samples: if samples > 0 { eq.quantile_points(samples)? } else { Vec::new() },
    })
}

fn density_csv(eq: &EquilibriumDensity, points: usize) -> String {
    let a = eq.half_width();
    let mut s = String::from("x,density\n");
    for k in 0..points {
        let x = if points == 1 {
            0.0
        } else {
            -a + 2.0 * a * k as f64 / (points - 1) as f64
        };
        let _ = writeln!(s, "{x:e},{:e}", eq.density(x));
    }
    s
}

fn write_equilibrium(out: &Path, eq: &EquilibriumDensity, summary: &EquilibriumSummary, grid: usize) -> Result<(), Error> {
    io::write_json(&out.join("equilibrium.json"), summary)?;
    if grid > 0 {
        io::write_text(&out.join("density.csv"), &density_csv(eq, grid))?;
    }
    if !summary.samples.is_empty() {
        let mut s = String::from("x\n");
        for x in &summary.samples {
            let _ = writeln!(s, "{x:e}");
        }
        io::write_text(&out.join("samples.csv"), &s)?;
    }
    Ok(())
}

fn config_target(cfg: &SimulationConfig) -> Result<EquilibriumDensity, Error> {
    cfg.target
        .or_else(|| EquilibriumSpec::for_potential(&cfg.potential))
        .ok_or_else(|| Error::Unsupported("no closed-form equilibrium for this potential".into()))?
        .build()
}

fn run_equilibrium(a: &EquilibriumArgs, start: Instant) -> Outcome {
    let eq = match (&a.config, a.potential.potential()) {
        (Some(path), _) => config_target(&SimulationConfig::load(path)?)?,
        (None, Some(v)) => EquilibriumSpec::for_potential(&v?)
            .ok_or_else(|| Error::Unsupported("no closed-form equilibrium".into()))?
            .build()?,
        (None, None) => {
            return Err(Failure::Config(
                "give --config or one of --quartic-confining -c C / --quartic-nonconfining -g G".into(),
            ))
        }
    };
    let summary = equilibrium_summary(&eq, a.samples)?;
    print_json(&summary);
    if let Some(out) = &a.out {
        create_dir(out)?;
        write_equilibrium(out, &eq, &summary, a.grid)?;
        let inputs: Vec<&Path> = a.config.iter().map(|p| p.as_path()).collect();
        write_manifest(out, "equilibrium", a.config.as_deref(), &inputs, start)?;
    }
    Ok(true)
}

/// Runs the simulation and writes the trajectory (partial on abort).
fn simulate_into(cfg: &SimulationConfig, out: &Path) -> Result<Option<Trajectory>, Failure> {
    match simulate(cfg, None) {
        Ok(traj) => {
            io::write_trajectory(out, &traj)?;
            eprintln!(
                "simulated {} records to t = {} ({} steps, {} halvings)",
                traj.series.len(),
                traj.series.last().map_or(0.0, |r| r.t),
                traj.meta.stats.accepted,
                traj.meta.stats.halvings
            );
            Ok(Some(traj))
        }
        Err(SimulationError::Setup(e)) => Err(e.into()),
        Err(e) => {
            if let Some(p) = e.partial() {
                io::write_trajectory(out, p)?;
            }
            eprintln!("simulation aborted: {e}");
            Ok(None)
        }
    }
}

fn run_simulate(a: &SimulateArgs, start: Instant) -> Outcome {
    let cfg = SimulationConfig::load(&a.config)?;
    create_dir(&a.out)?;
    let done = simulate_into(&cfg, &a.out)?;
    write_manifest(&a.out, "simulate", Some(&a.config), &[&a.config], start)?;
    Ok(done.is_some())
}

fn location(l: &Location) -> String {
    match l {
        Location::Time(t) => format!("t={t}"),
        Location::Pair { first, second } => format!("pair ({first}, {second})"),
        Location::None => "-".into(),
    }
}

fn print_report(r: &VerificationReport) {
    for c in &r.checks {
        let tag = match c.status {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
        };
        println!("[{tag}] {:<22} worst {:>12.4e} at {:<24} {}", c.name, c.worst_margin, location(&c.location), c.detail);
    }
    if let (Some(rate), Some(r2)) = (r.fitted_rate, r.fitted_r2) {
        println!("fitted W2 decay rate {rate} (r2 = {r2})");
    }
    if let Some(c) = r.certified_rate_2lambda {
        println!("certified rate 2 lambda {c}");
    }
    println!("{}", if r.passed { "verification passed" } else { "verification FAILED" });
}

fn run_verify(a: &VerifyArgs, start: Instant) -> Outcome {
    let traj = io::read_trajectory(&a.traj)?;
    let constants = match &a.constants {
        Some(p) => io::read_json::<ConstantsReport>(p)?,
        None => build_constants(&traj.meta.config)?,
    };
    let report = verify_convergence(&traj, &constants, &traj.meta.config.verify)?;
    let out = a.out.clone().unwrap_or_else(|| a.traj.join("verify"));
    create_dir(&out)?;
    io::write_json(&out.join("report.json"), &report)?;
    print_report(&report);
    let meta = a.traj.join("meta.json");
    let series = a.traj.join("series.csv");
    let mut inputs = vec![meta.as_path(), series.as_path()];
    if let Some(p) = &a.constants {
        inputs.push(p);
    }
    write_manifest(&out, "verify", None, &inputs, start)?;
    Ok(report.passed)
}

fn run_pipeline(a: &PipelineArgs, start: Instant) -> Outcome {
    let cfg = SimulationConfig::load(&a.config)?;
    create_dir(&a.out)?;
    let constants = build_constants(&cfg)?;
    io::write_json(&a.out.join("constants.json"), &constants)?;
    let eq = EquilibriumSpec::for_potential(&cfg.potential)
        .or(cfg.target)
        .map(|s| s.build())
        .transpose()?;
    if let Some(eq) = &eq {
        let summary = equilibrium_summary(eq, 0)?;
        write_equilibrium(&a.out, eq, &summary, 201)?;
    }
    let Some(traj) = simulate_into(&cfg, &a.out)? else {
        write_manifest(&a.out, "pipeline", Some(&a.config), &[&a.config], start)?;
        return Ok(false);
    };
    let report = verify_convergence(&traj, &constants, &cfg.verify)?;
    io::write_json(&a.out.join("report.json"), &report)?;
    print_report(&report);
    write_manifest(&a.out, "pipeline", Some(&a.config), &[&a.config], start)?;
    Ok(report.passed)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(k) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(k).build_global() {
            eprintln!("error: cannot configure {k} threads: {e}");
            return ExitCode::from(2);
        }
    }
    let start = Instant::now();
    let outcome = match &cli.command {
        Command::Constants(a) => run_constants(a, start),
        Command::Equilibrium(a) => run_equilibrium(a, start),
        Command::Simulate(a) => run_simulate(a, start),
        Command::Verify(a) => run_verify(a, start),
        Command::Pipeline(a) => run_pipeline(a, start),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Config(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
    }
}
