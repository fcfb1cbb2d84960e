//! `hmflow`: command line front end of the harmonic map heat flow laboratory.

mod report;
mod scenario;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use hmflow_core::harness::{
    random_pair_suite, run_scenario, sweep_boundary_map, DataFamily, RunManifest, RunOutcome, Scenario,
};
use hmflow_core::steady::{profile_header, shoot_profile, shoot_with_extrema, write_profile_csv, Shooter};
use serde_json::{json, Value};

const EXIT_ASSERTION: u8 = 2;
const EXIT_SOLVER: u8 = 3;

#[derive(Parser)]
#[command(name = "hmflow", version, about = "Equivariant harmonic map heat flow experiments")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    verb: Verb,
}

#[derive(Args)]
struct Global {
    /// TOML scenario file.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Base scenario (overrides a `preset` key in the config file).
    #[arg(long, global = true, value_name = "NAME")]
    preset: Option<String>,
    /// Output root; runs go to `<DIR>/runs/<hash>/`.
    #[arg(long, global = true, value_name = "DIR", default_value = "hmflow-out")]
    out: PathBuf,
    /// Worker threads for sweeps.
    #[arg(long, global = true, value_name = "N", default_value_t = 1)]
    jobs: usize,
    /// Seed of randomized suites and perturbed data.
    #[arg(long, global = true, value_name = "U64", default_value_t = 20_240_601)]
    seed: u64,
    /// Scenario override `key.path=value` (TOML value syntax), repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    sets: Vec<String>,
}

#[derive(Subcommand)]
enum Verb {
    /// Shoot the steady profile Phi_a for the scenario's m.
    Shoot {
        #[arg(long, default_value_t = 1.0)]
        a: f64,
        /// Integration range; defaults to 50.
        #[arg(long, default_value_t = 50.0)]
        r_max: f64,
        #[arg(long, default_value_t = 1e-11)]
        tol: f64,
        /// Integrate until this many extrema are found instead of up to r_max.
        #[arg(long)]
        extrema: Option<usize>,
    },
    /// Run the scenario and write its artifacts.
    Flow,
    /// Run the scenario with blowup classification; fails when the outcome
    /// contradicts the scenario's expectation.
    Classify,
    /// Run the scenario with the self-similar energy reports.
    Selfsim,
    /// Sweep the boundary value, or run the random intersection pair suite.
    Sweep(SweepArgs),
    /// Flatten the tabular artifacts of runs into one long-format CSV.
    Report {
        /// Run directories; defaults to every run below `--out`.
        runs: Vec<PathBuf>,
        /// Output file; defaults to standard output.
        #[arg(long, value_name = "PATH")]
        file: Option<PathBuf>,
        /// Include the snapshot profiles.
        #[arg(long)]
        snapshots: bool,
    },
}

#[derive(Args)]
struct SweepArgs {
    /// Comma-separated boundary values.
    #[arg(long, value_delimiter = ',', conflicts_with = "b_range")]
    b: Vec<f64>,
    /// `LO,HI,N`: N equally spaced boundary values.
    #[arg(long, value_delimiter = ',', num_args = 1, value_name = "LO,HI,N")]
    b_range: Option<Vec<f64>>,
    #[arg(long, value_enum, default_value_t = Family::Linear)]
    family: Family,
    /// Interior knots of perturbed data.
    #[arg(long, default_value_t = 3)]
    knots: usize,
    /// Noise amplitude of perturbed data.
    #[arg(long, default_value_t = 0.1)]
    amplitude: f64,
    /// Run this many random pairs of the intersection suite instead.
    #[arg(long, value_name = "N")]
    pairs: Option<usize>,
    /// Snapshot times of the pair suite.
    #[arg(long, value_delimiter = ',', default_value = "0.02,0.04,0.06,0.08,0.1,0.12,0.14,0.16,0.18,0.2,0.22,0.24,0.26,0.28,0.3,0.32,0.34,0.36,0.38,0.4")]
    pair_times: Vec<f64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Family {
    Linear,
    Perturbed,
}

enum Failure {
    Usage(String),
    Assertion(String),
    Solver(String),
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Assertion(msg)) => {
            eprintln!("assertion failed: {msg}");
            ExitCode::from(EXIT_ASSERTION)
        }
        Err(Failure::Solver(msg)) => {
            eprintln!("solver failure: {msg}");
            ExitCode::from(EXIT_SOLVER)
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let g = &cli.global;
    let load = || scenario::resolve(g.config.as_deref(), g.preset.as_deref(), &g.sets).map_err(Failure::Usage);
    match cli.verb {
        Verb::Shoot { a, r_max, tol, extrema } => shoot(&load()?, &g.out, a, r_max, tol, extrema),
        Verb::Flow => {
            let (manifest, dir) = execute(&load()?, &g.out)?;
            print(&summary(&manifest, &dir));
            solver_ok(&manifest)
        }
        Verb::Classify => {
            let mut s = load()?;
            s.diagnostics.blowup = true;
            let (manifest, dir) = execute(&s, &g.out)?;
            print(&summary(&manifest, &dir));
            solver_ok(&manifest)?;
            match manifest.expected_matched {
                Some(false) => Err(Failure::Assertion(format!(
                    "expected {:?}, got {:?} ({:?})",
                    s.expected, manifest.outcome, manifest.classification
                ))),
                _ => Ok(()),
            }
        }
        Verb::Selfsim => {
            let mut s = load()?;
            s.diagnostics.selfsim = true;
            let (manifest, dir) = execute(&s, &g.out)?;
            let mut out = summary(&manifest, &dir);
            out["monotonicity"] = read_json(&dir.join("reports/monotonicity.json"));
            print(&out);
            solver_ok(&manifest)
        }
        Verb::Sweep(args) => sweep(&load()?, g, &args),
        Verb::Report { runs, file, snapshots } => {
            let dirs = if runs.is_empty() { report::run_dirs(&g.out)? } else { runs };
            if dirs.is_empty() {
                return Err(Failure::Usage(format!("no runs below {}", g.out.display())));
            }
            let rows = match file {
                Some(path) => {
                    let f = std::fs::File::create(&path)?;
                    report::write_long_csv(&dirs, snapshots, std::io::BufWriter::new(f))
                }
                None => report::write_long_csv(&dirs, snapshots, std::io::stdout().lock()),
            }
            .map_err(Failure::Usage)?;
            eprintln!("{rows} rows from {} runs", dirs.len());
            Ok(())
        }
    }
}

fn execute(s: &Scenario, out: &Path) -> Result<(RunManifest, PathBuf), Failure> {
    let (manifest, _) = run_scenario(s, out).map_err(|e| Failure::Usage(e.to_string()))?;
    let dir = out.join("runs").join(&manifest.input_hash);
    Ok((manifest, dir))
}

fn solver_ok(m: &RunManifest) -> Result<(), Failure> {
    if m.outcome == RunOutcome::SolverFailure {
        return Err(Failure::Solver(format!("{:?}", m.stop_reason)));
    }
    Ok(())
}

fn summary(m: &RunManifest, dir: &Path) -> Value {
    json!({
        "scenario": m.scenario.name,
        "run_dir": dir.display().to_string(),
        "outcome": m.outcome,
        "stop_reason": m.stop_reason,
        "final_time": m.final_time,
        "steps": m.steps,
        "omega_hat": m.omega_hat,
        "omega_local": m.omega_local,
        "classification": m.classification,
        "expected": m.scenario.expected,
        "expected_matched": m.expected_matched,
    })
}

fn read_json(path: &Path) -> Value {
    std::fs::read_to_string(path).ok().and_then(|t| serde_json::from_str(&t).ok()).unwrap_or(Value::Null)
}

fn print(v: &Value) {
    println!("{}", serde_json::to_string_pretty(v).expect("json value serializes"));
}

fn shoot(s: &Scenario, out: &Path, a: f64, r_max: f64, tol: f64, extrema: Option<usize>) -> Result<(), Failure> {
    let m = s.params.m;
    let profile = match extrema {
        Some(n) => shoot_with_extrema(m, a, n, tol, Shooter::DormandPrince),
        None => shoot_profile(m, a, r_max, tol),
    }
    .map_err(|e| Failure::Solver(e.to_string()))?;
    let dir = out.join("steady");
    std::fs::create_dir_all(&dir)?;
    let stem = format!("profile_m{m}_a{a}");
    let csv_path = dir.join(format!("{stem}.csv"));
    let f = std::fs::File::create(&csv_path)?;
    write_profile_csv(&profile, std::io::BufWriter::new(f)).map_err(|e| Failure::Usage(e.to_string()))?;
    let header = serde_json::to_value(profile_header(&profile)).expect("header serializes");
    let mut text = serde_json::to_string_pretty(&header).expect("header serializes");
    text.push('\n');
    std::fs::write(dir.join(format!("{stem}.json")), text)?;
    print(&json!({ "profile": csv_path.display().to_string(), "header": header }));
    Ok(())
}

fn b_grid(args: &SweepArgs) -> Result<Vec<f64>, Failure> {
    match &args.b_range {
        Some(v) => {
            let [lo, hi, n] = v.as_slice() else {
                return Err(Failure::Usage("--b-range expects LO,HI,N".into()));
            };
            let n = *n as usize;
            if n < 2 || !(hi > lo) {
                return Err(Failure::Usage("--b-range needs LO < HI and N >= 2".into()));
            }
            Ok((0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect())
        }
        None if !args.b.is_empty() => Ok(args.b.clone()),
        None => Err(Failure::Usage("sweep needs --b, --b-range or --pairs".into())),
    }
}

fn sweep(s: &Scenario, g: &Global, args: &SweepArgs) -> Result<(), Failure> {
    std::fs::create_dir_all(&g.out)?;
    if let Some(count) = args.pairs {
        let suite = random_pair_suite(g.seed, count, &s.config, &args.pair_times, g.jobs);
        write_json(&g.out.join("pairs.json"), &suite)?;
        let fraction = suite.fraction_non_increasing();
        let failing: Vec<usize> =
            suite.pairs.iter().enumerate().filter(|(_, p)| !p.non_increasing || p.error.is_some()).map(|(i, _)| i).collect();
        print(&json!({ "seed": g.seed, "pairs": count, "fraction_non_increasing": fraction, "failing_pairs": failing }));
        return if failing.is_empty() {
            Ok(())
        } else {
            Err(Failure::Assertion(format!("{} of {count} pairs gained intersections", failing.len())))
        };
    }
    let grid = b_grid(args)?;
    let family = match args.family {
        Family::Linear => DataFamily::Linear,
        Family::Perturbed => DataFamily::Perturbed { seed: g.seed, knots: args.knots, amplitude: args.amplitude },
    };
    let table = sweep_boundary_map(s.params.m, &grid, family, &s.config, s.stop, g.jobs);
    let f = std::fs::File::create(g.out.join("sweep.csv"))?;
    table.write_csv(std::io::BufWriter::new(f)).map_err(|e| Failure::Usage(e.to_string()))?;
    write_json(&g.out.join("sweep.json"), &table)?;
    let violations: Vec<f64> = table
        .rows
        .iter()
        .filter(|r| {
            let b = r.b.abs();
            (b < table.half_pi && r.outcome == RunOutcome::BlowupResolved)
                || table.theta_m.is_some_and(|th| b > th && r.outcome == RunOutcome::GlobalExistence)
        })
        .map(|r| r.b)
        .collect();
    print(&json!({
        "m": table.m,
        "runs": table.rows.len(),
        "b_global_max": table.b_global_max,
        "b_blowup_min": table.b_blowup_min,
        "half_pi": table.half_pi,
        "theta_m": table.theta_m,
        "contradictions": violations,
    }));
    if table.rows.iter().any(|r| r.outcome == RunOutcome::SolverFailure) {
        return Err(Failure::Solver("a sweep run failed; see sweep.csv".into()));
    }
    if !violations.is_empty() {
        return Err(Failure::Assertion(format!("outcomes contradict the dichotomy at b = {violations:?}")));
    }
    Ok(())
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<(), Failure> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Failure::Usage(e.to_string()))?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}
