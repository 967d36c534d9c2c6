//! Acceptance suite. Prints one `[PASS]`/`[FAIL]` line per criterion.
//!
//! Runs the three long trajectories through the `loggas` binary, then reruns
//! them with a different `--threads` setting to compare series bytes.
//! Criteria listed in `UNATTAINABLE` are evaluated and reported like the
//! others, but their failure does not fail the process; everything else does.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use loggas::constants::{beta_star, beta_star_eq, certified_rate, nonconfining_support_bound, GammaChoice, RadiusSearch};
use loggas::dynamics::Trajectory;
use loggas::functionals::{entropy_density, fisher_discrete, hilbert_density};
use loggas::io::read_trajectory;
use loggas::verifier::{check_dissipation, check_logsob, check_transport, Status, VerificationReport};
use loggas::{EquilibriumDensity, Potential};

/// Criteria that cannot hold as stated; see the README.
const UNATTAINABLE: &[(u32, &str)] = &[
    (
        7,
        "the flow's measured D/(4 Sigma_rel) >= 2.0 and Sigma_rel/W2^2 >= 1.58 exceed 1000 lambda = 1.118, so x1000 cannot flip",
    ),
    (8, "no M* satisfies the support inequality for g = -0.05, m = 1"),
];

struct Outcome {
    id: u32,
    pass: bool,
    detail: String,
}

fn outcome(id: u32, parts: &[(bool, String)]) -> Outcome {
    let pass = parts.iter().all(|(ok, _)| *ok);
    let detail = parts
        .iter()
        .map(|(ok, s)| format!("{}{s}", if *ok { "" } else { "FAILED " }))
        .collect::<Vec<_>>()
        .join("; ");
    Outcome { id, pass, detail }
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn loggas(args: &[&str]) -> Option<i32> {
    let out = Command::new(env!("CARGO_BIN_EXE_loggas"))
        .args(args)
        .output()
        .expect("spawn loggas");
    out.status.code()
}

/// Pipeline run with one thread, plus a bare simulate rerun with four.
struct Run {
    dir: PathBuf,
    rerun: PathBuf,
    exit: Option<i32>,
    rerun_exit: Option<i32>,
}

fn execute(root: &Path, name: &str) -> Run {
    let cfg = configs().join(format!("{name}.json"));
    let dir = root.join(name);
    let rerun = root.join(format!("{name}_threads4"));
    let t = Instant::now();
    let exit = loggas(&["--threads", "1", "pipeline", "--config", cfg.to_str().unwrap(), "--out", dir.to_str().unwrap()]);
    let rerun_exit = loggas(&["--threads", "4", "simulate", "--config", cfg.to_str().unwrap(), "--out", rerun.to_str().unwrap()]);
    eprintln!("  {name}: {:.1} s", t.elapsed().as_secs_f64());
    Run { dir, rerun, exit, rerun_exit }
}

fn load(run: &Run) -> (Trajectory, VerificationReport) {
    let traj = read_trajectory(&run.dir).expect("trajectory");
    let report: VerificationReport = serde_json::from_slice(&std::fs::read(run.dir.join("report.json")).expect("report")).unwrap();
    (traj, report)
}

fn check_passed(report: &VerificationReport, name: &str) -> (bool, String) {
    match report.check(name) {
        Some(c) => (c.status == Status::Pass, format!("{name} worst {:.3e}", c.worst_margin)),
        None => (false, format!("{name} missing")),
    }
}

fn criterion_1() -> Outcome {
    let eq = EquilibriumDensity::nonconfining(0.0).unwrap();
    let worst = (0..20)
        .map(|k| -1.9 + 3.8 * k as f64 / 19.0)
        .map(|x| (hilbert_density(&eq, x).unwrap() - 0.5 * x).abs())
        .fold(0.0, f64::max);
    let sample = eq.sample(2000).unwrap();
    let fisher = fisher_discrete(&sample, &Potential::QuarticNonconfining { g: 0.0 });
    outcome(
        1,
        &[
            (worst <= 1e-6, format!("max |H - x/2| = {worst:.2e} <= 1e-6")),
            (fisher <= 5e-3, format!("Fisher(N=2000) = {fisher:.3e} <= 5e-3")),
        ],
    )
}

fn criterion_2() -> Outcome {
    let eq = EquilibriumDensity::nonconfining(0.0).unwrap();
    let value = entropy_density(&eq, &Potential::QuarticNonconfining { g: 0.0 }).unwrap();
    let rho = common::semicircle;
    let external = common::tanh_sinh(-2.0, 2.0, |x| 0.5 * x * x * rho(x));
    let interaction = common::tanh_sinh(-2.0, 2.0, |x| {
        let inner = |y: f64| (x - y).abs().ln() * rho(y);
        rho(x) * (common::tanh_sinh(-2.0, x, inner) + common::tanh_sinh(x, 2.0, inner))
    });
    let oracle = external - interaction;
    outcome(
        2,
        &[
            ((value - 0.75).abs() <= 1e-3, format!("entropy_density = {value:.8}, |. - 0.75| <= 1e-3")),
            (
                (oracle - 0.75).abs() <= 1e-3 && (external - 0.5).abs() <= 1e-6 && (interaction + 0.25).abs() <= 1e-3,
                format!("oracle {external:.8} - ({interaction:.8}) = {oracle:.8}"),
            ),
        ],
    )
}

/// Golden-section refinement of a log-spaced grid maximum.
fn grid_max<F: Fn(f64) -> f64>(lo: f64, hi: f64, f: F) -> f64 {
    let n = 20_000;
    let at = |i: usize| lo * (hi / lo).powf(i as f64 / n as f64);
    let best = (0..=n).max_by(|&a, &b| f(at(a)).total_cmp(&f(at(b)))).unwrap();
    let (mut a, mut b) = (at(best.saturating_sub(1)), at((best + 1).min(n)));
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..200 {
        let c = b - phi * (b - a);
        let d = a + phi * (b - a);
        if f(c) >= f(d) {
            b = d;
        } else {
            a = c;
        }
    }
    f(0.5 * (a + b))
}

fn criterion_3() -> Outcome {
    let mut parts = Vec::new();
    let formula_err = [0.3, 1.0, 7.0, 20.0]
        .iter()
        .flat_map(|&r| [2.0, 4.5].map(|m| (r, m)))
        .map(|(r, m): (f64, f64)| {
            let closed = (1.0 / (4.0 * r * r)) * (1.0 - 8.0 * m / (r * r));
            (beta_star(r, m, 2.0, GammaChoice::Quarter.gamma(r)) - closed).abs()
        })
        .fold(0.0, f64::max);
    parts.push((formula_err <= 1e-15, format!("beta*(r) closed form err {formula_err:.1e}")));

    // for c < 0, beta = -c and lambda(r) = min(3r^2 + c, beta* + c) / 2
    let search = RadiusSearch { r0: None, r_max: 1e4, gamma: GammaChoice::Quarter };
    for (c, m2_init) in [(-0.001, 0.0), (-0.001, 4.0), (-0.002, 1.0)] {
        let v = Potential::QuarticConfining { c };
        let rc = certified_rate(&v, m2_init, search).unwrap().unwrap();
        let m = (1.0 + 2f64.sqrt()).max(m2_init);
        let r = rc.r;
        let bs = (1.0 / (4.0 * r * r)) * (1.0 - 8.0 * m / (r * r));
        let lam = 0.5 * (3.0 * r * r + c).min(bs + c);
        parts.push((
            rc.m == m && (rc.lambda - lam).abs() <= 1e-15,
            format!("c={c} m2(0)={m2_init}: M = {m:.6}, lambda = {:.7e}", rc.lambda),
        ));
        let grid = grid_max(0.01, 1e4, |r| (1.0 / (4.0 * r * r)) * (1.0 - 8.0 * m / (r * r)));
        let opt = beta_star_eq(2.0, m, 0.01, 1e4, GammaChoice::Quarter).unwrap();
        let exact = 1.0 / (128.0 * m);
        parts.push((
            (opt.beta_star - exact).abs() <= 1e-8 && (grid - exact).abs() <= 1e-8,
            format!("max beta* = {:.10e}, grid {grid:.10e}, 1/(128M) = {exact:.10e}", opt.beta_star),
        ));
    }
    outcome(3, &parts)
}

fn criteria_4_5(traj: &Trajectory) -> (Outcome, Outcome) {
    let diss = check_dissipation(traj, 1e-3, 0.99).unwrap();
    let o4 = outcome(4, &[(diss.status == Status::Pass, diss.detail.clone())]);
    let m2_0 = traj.series[0].m2;
    let bound = (1.0 + 2f64.sqrt()).max(m2_0) + 0.05;
    let peak = traj.series.iter().map(|r| r.m2).fold(f64::NEG_INFINITY, f64::max);
    let o5 = outcome(5, &[(peak <= bound, format!("max m2 = {peak:.6} <= {bound:.6} (m2(0) = {m2_0:.6})"))]);
    (o4, o5)
}

fn criterion_6(traj: &Trajectory, report: &VerificationReport) -> Outcome {
    let w = |i: usize| traj.series[i].w2;
    let n = traj.series.len();
    let floor = report.noise_floor.unwrap_or(f64::NAN);
    let tail_max = (3 * n / 4..n).map(w).fold(0.0, f64::max);
    outcome(
        6,
        &[
            (
                w(n - 1) <= 1e-2 * w(0) && tail_max <= floor,
                format!("W2 {:.3e} -> {:.3e}, last quarter max {tail_max:.3e} <= floor {floor:.3e}", w(0), w(n - 1)),
            ),
            {
                let (ok, s) = check_passed(report, "decay_rate");
                (
                    ok && report.certified_rate_2lambda.is_some_and(|r| (r - 0.00224).abs() < 1e-5),
                    format!(
                        "{s}, fitted {:.4} >= 2 lambda {:.6}",
                        report.fitted_rate.unwrap_or(f64::NAN),
                        report.certified_rate_2lambda.unwrap_or(f64::NAN)
                    ),
                )
            },
            check_passed(report, "envelope"),
        ],
    )
}

fn criterion_7(traj: &Trajectory, report: &VerificationReport, lambda: f64) -> Outcome {
    let logsob = check_logsob(traj, 1000.0 * lambda, 0.02).unwrap();
    let transport = check_transport(traj, 1000.0 * lambda, 0.02).unwrap();
    outcome(
        7,
        &[
            check_passed(report, "hwi"),
            check_passed(report, "log_sobolev"),
            check_passed(report, "transport"),
            (
                logsob.status == Status::Fail && transport.status == Status::Fail,
                format!(
                    "x1000 lambda flips: log_sobolev worst {:.3e}, transport worst {:.3e}",
                    logsob.worst_margin, transport.worst_margin
                ),
            ),
        ],
    )
}

fn criterion_8(traj: &Trajectory, report: &VerificationReport) -> Outcome {
    let flat = nonconfining_support_bound(1.0, 0.0).unwrap().unwrap_or(f64::NAN);
    let m_star = nonconfining_support_bound(1.0, -0.05).unwrap();
    let reach = traj.series.iter().map(|r| r.support_radius).fold(0.0, f64::max);
    let contained = match m_star {
        Some(m) => (reach <= m, format!("max |x| = {reach:.6} <= M*(1) = {m:.6}")),
        None => (false, format!("max |x| = {reach:.6}, but M*(1) does not exist for g = -0.05")),
    };
    outcome(
        8,
        &[
            ((flat - (2.0 + 2f64.sqrt())).abs() <= 1e-8, format!("g=0: M*(1) = {flat:.10} vs 2 + sqrt2")),
            contained,
            {
                let (ok, s) = check_passed(report, "decay_rate");
                (ok && report.fitted_rate.is_some_and(|r| r > 0.0), format!("{s}, fitted {:.4} > 0", report.fitted_rate.unwrap_or(f64::NAN)))
            },
        ],
    )
}

fn criterion_9(runs: &[&Run]) -> Outcome {
    let parts: Vec<(bool, String)> = runs
        .iter()
        .map(|r| {
            let a = std::fs::read(r.dir.join("series.csv")).unwrap_or_default();
            let b = std::fs::read(r.rerun.join("series.csv")).unwrap_or_default();
            let name = r.dir.file_name().unwrap().to_string_lossy().into_owned();
            (!a.is_empty() && a == b, format!("{name}: {} bytes, threads 1 vs 4 identical", a.len()))
        })
        .collect();
    outcome(9, &parts)
}

fn main() {
    let root = Path::new(env!("CARGO_TARGET_TMPDIR")).join("acceptance");
    let _ = std::fs::remove_dir_all(&root);
    std::fs::create_dir_all(&root).unwrap();

    let mut results = vec![criterion_1(), criterion_2(), criterion_3()];

    eprintln!("running trajectories:");
    let run4 = execute(&root, "quartic_c_minus_half");
    let run6 = execute(&root, "quartic_small_c");
    let run8 = execute(&root, "nonconfining_g005");
    for r in [&run4, &run6, &run8] {
        eprintln!("  exit codes: pipeline {:?}, rerun {:?}", r.exit, r.rerun_exit);
    }

    let (traj4, _) = load(&run4);
    let (o4, o5) = criteria_4_5(&traj4);
    results.extend([o4, o5]);

    let (traj6, report6) = load(&run6);
    let constants6: serde_json::Value =
        serde_json::from_slice(&std::fs::read(run6.dir.join("constants.json")).expect("constants")).unwrap();
    let lambda = constants6["lambda"].as_f64().unwrap_or(f64::NAN);
    results.push(criterion_6(&traj6, &report6));
    results.push(criterion_7(&traj6, &report6, lambda));

    let (traj8, report8) = load(&run8);
    results.push(criterion_8(&traj8, &report8));
    results.push(criterion_9(&[&run4, &run6, &run8]));

    let mut unexpected = 0;
    for o in &results {
        let known = UNATTAINABLE.iter().find(|(id, _)| *id == o.id);
        let tag = if o.pass { "PASS" } else { "FAIL" };
        println!("[{tag}] criterion {}: {}", o.id, o.detail);
        match (o.pass, known) {
            (false, Some((_, why))) => println!("       unattainable as stated: {why}"),
            (false, None) => unexpected += 1,
            (true, Some(_)) => println!("       passed although listed as unattainable"),
            (true, None) => {}
        }
    }
    let passed = results.iter().filter(|o| o.pass).count();
    println!("acceptance: {passed}/{} criteria pass, {unexpected} unexpected failure(s)", results.len());
    if unexpected > 0 {
        std::process::exit(1);
    }
}
