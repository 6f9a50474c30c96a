use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use bsd_lab_core::dist::{parse_distribution_csv, parse_scenario_csv};
use bsd_lab_core::dominance::{check_bsd, check_lpm_at, check_sd};
use bsd_lab_core::harness::{self, HarnessConfig, SweepConfig};
use bsd_lab_core::portfolio::{self, PortfolioProblem, DEFAULT_MAX_ITERATIONS};
use bsd_lab_core::utility::{self, Descriptor, DEFAULT_GRID, DEFAULT_TOLERANCE};
use bsd_lab_core::{polyseg, DiscreteDistribution, Error, Interval, Result, UtilitySpec};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Deserialize;
use serde_json::{json, Value};

const THREADS_VAR: &str = "BSD_LAB_THREADS";

#[derive(Parser)]
#[command(name = "bsd-lab", version, about = "Bounded stochastic dominance certificates and portfolio checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Lower partial moment of a distribution at one threshold, or its full curve.
    Lpm {
        dist: PathBuf,
        #[arg(long)]
        n: u32,
        #[arg(long, required_unless_present = "curve", allow_hyphen_values = true)]
        c: Option<f64>,
        /// Print the piecewise-polynomial curve on [a, b] instead of one value.
        #[arg(long)]
        curve: bool,
        #[arg(long, allow_hyphen_values = true)]
        a: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        b: Option<f64>,
    },
    /// Dominance check: does LPM(F) >= LPM(G) hold over the order's thresholds?
    Check {
        f: PathBuf,
        g: PathBuf,
        #[arg(long, value_enum, default_value_t = Order::Bsd)]
        order: Order,
        /// LPM exponent being compared.
        #[arg(long)]
        exponent: u32,
        #[arg(long, allow_hyphen_values = true)]
        a: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        b: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        c: Option<f64>,
        /// Absolute margin tolerance; defaults to 1e-9 times the curve size.
        #[arg(long)]
        tolerance: Option<f64>,
    },
    /// Utility-class membership test for a descriptor or utility JSON file.
    Utility {
        spec: PathBuf,
        #[arg(long, value_enum)]
        class: Class,
        #[arg(long)]
        n: u32,
        #[arg(long, allow_hyphen_values = true)]
        a: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        b: Option<f64>,
        #[arg(long, default_value_t = DEFAULT_GRID)]
        grid: usize,
        #[arg(long, default_value_t = DEFAULT_TOLERANCE)]
        tolerance: f64,
    },
    /// Randomized verification of the dominance characterization, the class equalities and the derived bounds.
    Verify {
        /// Trials per order in the characterization harness.
        #[arg(long, default_value_t = 500)]
        trials: usize,
        #[arg(long, value_delimiter = ',', default_value = "1,2,3")]
        n_set: Vec<u32>,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 8)]
        atoms: usize,
        /// Generator utilities tested per holding direction.
        #[arg(long, default_value_t = 200)]
        utilities: usize,
        /// Utilities sampled in the class-equality sweep.
        #[arg(long, default_value_t = 2000)]
        samples: usize,
        /// Instances sampled in the root-convexity and Jensen-chain sweep.
        #[arg(long, default_value_t = 1000)]
        consequence_samples: usize,
        #[arg(long, value_delimiter = ',', default_value = "2,3,4")]
        sweep_n_set: Vec<u32>,
        #[arg(long)]
        tolerance: Option<f64>,
        /// Use G = F in every trial.
        #[arg(long)]
        force_equal: bool,
        /// JSONL report path.
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(long, hide = true)]
        corrupt_tolerance: bool,
    },
    /// Maximize expected return subject to bounded dominance over a benchmark.
    Portfolio {
        problem: PathBuf,
        #[arg(long, default_value_t = DEFAULT_MAX_ITERATIONS)]
        max_iterations: usize,
        /// Also write `asset,weight` rows to this CSV file.
        #[arg(long)]
        weights_csv: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Order {
    Bsd,
    Sd,
    At,
}

#[derive(Clone, Copy, ValueEnum)]
enum Class {
    U,
    G,
    Ap,
    Lp,
}

struct Outcome {
    code: u8,
    json: Value,
    summary: String,
}

impl Outcome {
    fn new(holds: bool, json: Value, summary: String) -> Self {
        Self { code: if holds { 0 } else { 1 }, json, summary }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli.command) {
        Ok(out) => {
            println!("{}", serde_json::to_string_pretty(&out.json).expect("JSON values serialize"));
            eprintln!("{}", out.summary);
            ExitCode::from(out.code)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_input_error() { 2 } else { 3 })
        }
    }
}

fn run(command: Command) -> Result<Outcome> {
    match command {
        Command::Lpm { dist, n, c, curve, a, b } => cmd_lpm(&dist, n, c, curve, a, b),
        Command::Check { f, g, order, exponent, a, b, c, tolerance } => {
            cmd_check(&f, &g, order, exponent, (a, b), c, tolerance)
        }
        Command::Utility { spec, class, n, a, b, grid, tolerance } => {
            cmd_utility(&spec, class, n, (a, b), grid, tolerance)
        }
        Command::Verify {
            trials,
            n_set,
            seed,
            atoms,
            utilities,
            samples,
            consequence_samples,
            sweep_n_set,
            tolerance,
            force_equal,
            report,
            corrupt_tolerance,
        } => {
            let threads = threads_from_env()?;
            let harness = HarnessConfig {
                trials,
                n_set,
                atom_budget: atoms,
                seed,
                utilities,
                tolerance: if corrupt_tolerance { Some(f64::NAN) } else { tolerance },
                threads,
                force_equal,
            };
            let sweep = SweepConfig { samples, n_set: sweep_n_set, seed, threads, ..SweepConfig::default() };
            cmd_verify(&harness, &sweep, consequence_samples, report.as_deref())
        }
        Command::Portfolio { problem, max_iterations, weights_csv } => {
            cmd_portfolio(&problem, max_iterations, weights_csv.as_deref())
        }
    }
}

/// `BSD_LAB_THREADS`: unset uses the global pool, 0 runs serially.
fn threads_from_env() -> Result<Option<usize>> {
    match std::env::var(THREADS_VAR) {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| Error::Parse(format!("{THREADS_VAR}={v} is not a thread count"))),
        Err(_) => Ok(None),
    }
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn read_atoms(path: &Path) -> Result<(Vec<f64>, Vec<f64>)> {
    parse_distribution_csv(open(path)?)
}

/// `[a, b]` from the flags, each side defaulting to the extreme atom.
fn interval_for(atoms: &[&[f64]], a: Option<f64>, b: Option<f64>) -> Result<Interval> {
    let lo = atoms.iter().flat_map(|s| s.iter()).cloned().fold(f64::INFINITY, f64::min);
    let hi = atoms.iter().flat_map(|s| s.iter()).cloned().fold(f64::NEG_INFINITY, f64::max);
    let a = a.unwrap_or(lo);
    let b = b.unwrap_or(if hi > a { hi } else { a + 1.0 });
    Interval::new(a, b)
}

fn cmd_lpm(path: &Path, n: u32, c: Option<f64>, curve: bool, a: Option<f64>, b: Option<f64>) -> Result<Outcome> {
    let (atoms, probs) = read_atoms(path)?;
    let dist = DiscreteDistribution::new(&atoms, &probs, interval_for(&[&atoms], a, b)?, false)?;
    if curve {
        let curve = polyseg::lpm_curve(&dist, n)?;
        let summary = format!("LPM curve of exponent {n}: {} pieces", curve.pieces().len());
        return Ok(Outcome::new(true, serde_json::to_value(&curve)?, summary));
    }
    let c = c.ok_or_else(|| Error::Parse("--c or --curve is required".into()))?;
    if !c.is_finite() {
        return Err(Error::Parse(format!("threshold {c} is not finite")));
    }
    let value = dist.lpm(n, c);
    Ok(Outcome::new(true, json!({ "lpm": value }), format!("LPM_{n}({c}) = {value}")))
}

fn cmd_check(
    f: &Path,
    g: &Path,
    order: Order,
    exponent: u32,
    (a, b): (Option<f64>, Option<f64>),
    c: Option<f64>,
    tolerance: Option<f64>,
) -> Result<Outcome> {
    let (fa, fp) = read_atoms(f)?;
    let (ga, gp) = read_atoms(g)?;
    let interval = interval_for(&[&fa, &ga], a, b)?;
    let fd = DiscreteDistribution::new(&fa, &fp, interval, false)?;
    let gd = DiscreteDistribution::new(&ga, &gp, interval, false)?;
    let verdict = match order {
        Order::Bsd => check_bsd(&fd, &gd, exponent, interval, tolerance)?,
        Order::Sd => check_sd(&fd, &gd, exponent, tolerance)?,
        Order::At => {
            let c = c.ok_or_else(|| Error::Parse("--order at needs --c".into()))?;
            check_lpm_at(&fd, &gd, exponent, c, tolerance)?
        }
    };
    let summary = match verdict.witness_c {
        Some(w) if !verdict.holds => {
            format!("{}: fails, margin {:e} at c = {w}", verdict.order, verdict.min_margin)
        }
        _ => format!("{}: holds, min margin {:e}", verdict.order, verdict.min_margin),
    };
    Ok(Outcome::new(verdict.holds, serde_json::to_value(&verdict)?, summary))
}

/// A utility file holds either a full utility (`"type"` key) or a closed-form
/// descriptor (`"kind"` key) placed on `[a, b]` from the flags.
fn read_utility(path: &Path, (a, b): (Option<f64>, Option<f64>)) -> Result<UtilitySpec> {
    let value: Value = serde_json::from_reader(open(path)?)?;
    if value.get("type").is_some() {
        let u: UtilitySpec = serde_json::from_value(value)?;
        return Ok(u);
    }
    let descriptor: Descriptor = serde_json::from_value(value)?;
    let interval = Interval::new(
        a.ok_or_else(|| Error::Parse("a descriptor needs --a".into()))?,
        b.ok_or_else(|| Error::Parse("a descriptor needs --b".into()))?,
    )?;
    UtilitySpec::closed_form(descriptor, interval)
}

fn cmd_utility(
    path: &Path,
    class: Class,
    n: u32,
    bounds: (Option<f64>, Option<f64>),
    grid: usize,
    tolerance: f64,
) -> Result<Outcome> {
    let u = read_utility(path, bounds)?;
    let report = match class {
        Class::U => utility::check_u(&u, n, grid, tolerance)?,
        Class::G => utility::check_g(&u, n, grid, tolerance)?,
        Class::Ap => utility::check_ap(&u, n, grid, tolerance)?,
        Class::Lp => utility::check_lp(&u, n, grid, tolerance)?,
    };
    let summary = format!(
        "{}: {}, worst slack {:e} at x = {}",
        report.class_id,
        if report.member { "member" } else { "not a member" },
        report.worst_slack,
        report.worst_location
    );
    Ok(Outcome::new(report.member, serde_json::to_value(&report)?, summary))
}

fn cmd_verify(
    harness: &HarnessConfig,
    sweep: &SweepConfig,
    consequence_samples: usize,
    report: Option<&Path>,
) -> Result<Outcome> {
    let h = harness::run_characterization_harness(harness)?;
    let sets = harness::run_set_equality_sweep(sweep)?;
    let consequences = harness::run_consequence_sweep(&SweepConfig { samples: consequence_samples, ..sweep.clone() })?;
    if let Some(path) = report {
        let file = File::create(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        let mut out = BufWriter::new(file);
        h.write_jsonl(&mut out)?;
        serde_json::to_writer(&mut out, &json!({ "set_equality": &sets }))?;
        out.write_all(b"\n")?;
        serde_json::to_writer(&mut out, &json!({ "consequences": &consequences }))?;
        out.write_all(b"\n")?;
        out.flush()?;
    }
    let counterexamples = h.counterexamples()
        + sets.g_ap_disagreements
        + sets.ap_lp_disagreements
        + consequences.convexity_disagreements
        + consequences.chain_violations;
    let json = json!({
        "trials": h.trials,
        "forward_violations": h.forward_violations,
        "converse_failures": h.converse_failures,
        "numerical_failures": h.numerical_failures,
        "set_equality": {
            "sampled": sets.sampled,
            "excluded": sets.excluded,
            "excluded_fraction": sets.excluded_fraction,
            "g_ap_disagreements": sets.g_ap_disagreements,
            "ap_lp_disagreements": sets.ap_lp_disagreements,
        },
        "consequences": {
            "convexity_checked": consequences.convexity_checked,
            "convexity_disagreements": consequences.convexity_disagreements,
            "chain_checked": consequences.chain_checked,
            "chain_violations": consequences.chain_violations,
            "strictly_tighter": consequences.strictly_tighter,
        },
        "counterexamples": counterexamples,
        "report": report.map(|p| p.display().to_string()),
    });
    let summary = format!(
        "{} trials, {} counterexamples, {} numerical failures",
        h.trials, counterexamples, h.numerical_failures
    );
    let code = if h.numerical_failures > 0 {
        3
    } else if counterexamples > 0 {
        1
    } else {
        0
    };
    Ok(Outcome { code, json, summary })
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ProblemFile {
    scenarios_csv: PathBuf,
    benchmark_csv: PathBuf,
    n: u32,
    a: f64,
    b: f64,
    #[serde(default = "default_problem_tolerance")]
    tolerance: f64,
}

fn default_problem_tolerance() -> f64 {
    portfolio::DEFAULT_TOLERANCE
}

fn read_problem(path: &Path) -> Result<PortfolioProblem> {
    let file: ProblemFile = serde_json::from_reader(open(path)?)?;
    let base = path.parent().unwrap_or(Path::new("."));
    let table = parse_scenario_csv(open(&base.join(&file.scenarios_csv))?)?;
    let (atoms, probs) = read_atoms(&base.join(&file.benchmark_csv))?;
    let interval = Interval::new(file.a, file.b)?;
    let benchmark = DiscreteDistribution::new(&atoms, &probs, interval, false)?;
    PortfolioProblem::new(table, benchmark, file.n, interval, file.tolerance)
}

fn cmd_portfolio(path: &Path, max_iterations: usize, weights_csv: Option<&Path>) -> Result<Outcome> {
    let problem = read_problem(path)?;
    let solution = match portfolio::solve(&problem, max_iterations) {
        Ok(s) => s,
        Err(Error::Infeasible(reason)) => {
            let json = json!({ "status": "infeasible", "reason": reason });
            return Ok(Outcome::new(false, json, format!("infeasible: {reason}")));
        }
        Err(e) => return Err(e),
    };
    if let Some(out) = weights_csv {
        let file = File::create(out).map_err(|e| Error::Io(format!("{}: {e}", out.display())))?;
        let mut w = BufWriter::new(file);
        writeln!(w, "asset,weight")?;
        let names = problem.table.asset_names().map(<[String]>::to_vec);
        for (i, weight) in solution.weights.iter().enumerate() {
            let name = names.as_ref().map_or_else(|| format!("asset{i}"), |n| n[i].clone());
            writeln!(w, "{name},{weight}")?;
        }
        w.flush()?;
    }
    let summary = format!(
        "expected return {} with max violation {:e} after {} iterations",
        solution.expected_return, solution.max_violation, solution.iterations
    );
    Ok(Outcome::new(true, serde_json::to_value(&solution)?, summary))
}
