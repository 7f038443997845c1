//! Command-line front end.
//!
//! Exit codes: 0 when the requested check passes, 1 when it fails, 2 on usage
//! errors (bad flags, unknown names, unreadable spec files).

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use num::{BigInt, BigRational};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::buchstab::{
    mid_closed_form, omega_lower, omega_simple_upper, omega_upper, BuchstabTable, DEFAULT_STEP, DEFAULT_U_MAX,
    TAIL_LOWER, TAIL_UPPER,
};
use crate::dsl::{builtin_specs, load_specs_from_dir, parse, parse_expr, Atom, IntegralSpec};
use crate::lossbudget::{
    judge, run as run_budget, sensitivity_with, LossReport, Profile, RunOptions, SensitivityReport, Verdict,
    DEFAULT_BLOCKS, DEFAULT_SEED,
};
use crate::quadrature::{estimate_with, grid_estimate, EstimateConfig, IntegralEstimate, MIN_GRID_POINTS};
use crate::regions::{self, Partition};

pub const SPECS_ENV: &str = "SIEVE_VERIFIER_SPECS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Text,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ProfileArg {
    Fast,
    Full,
}

impl From<ProfileArg> for Profile {
    fn from(p: ProfileArg) -> Self {
        match p {
            ProfileArg::Fast => Profile::Fast,
            ProfileArg::Full => Profile::Full,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "sieve-verifier", version, about = "Numerical checks for a sieve loss budget")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args)]
struct Common {
    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Samples per integral; overrides the profile budgets.
    #[arg(long, global = true)]
    samples: Option<u64>,
    #[arg(long, global = true, default_value_t = DEFAULT_BLOCKS)]
    blocks: usize,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true, value_enum, default_value = "fast")]
    profile: ProfileArg,
    #[arg(long, global = true, value_enum, default_value = "text")]
    format: Format,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Directory of NAME.spec files replacing the built-ins.
    #[arg(long, global = true, env = SPECS_ENV)]
    specs: Option<PathBuf>,
    /// Require every group of a partition to be nonempty.
    #[arg(long, global = true)]
    strict: bool,
    /// Stratify the first two coordinates.
    #[arg(long, global = true)]
    stratify: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check the ω table against closed forms and the printed bounds.
    VerifyBuchstab {
        #[arg(long, default_value_t = 10_000)]
        points: usize,
        #[arg(long, default_value_t = DEFAULT_STEP)]
        step: f64,
        #[arg(long, default_value_t = DEFAULT_U_MAX)]
        u_max: f64,
    },
    /// Membership of a point in a region (T0, T21, J, J3, L, U_M1, ...).
    EvalRegion {
        region: String,
        #[arg(required = true, allow_negative_numbers = true)]
        coords: Vec<String>,
    },
    /// Monte Carlo estimate of one integral (built-in name or .spec path).
    Estimate { spec: String },
    /// Run every component and judge the budget.
    VerifyLoss,
    /// Re-run the budget under alternative readings.
    Sensitivity,
    /// Compare the midpoint grid with Monte Carlo for a spec of dimension ≤ 3.
    Oracle {
        spec: String,
        #[arg(long, default_value_t = 1000)]
        points: usize,
    },
}

/// A failure that maps to an exit code.
#[derive(Debug)]
enum Failure {
    Usage(String),
    Runtime(String),
}

type CliResult<T> = Result<T, Failure>;

fn usage(e: impl std::fmt::Display) -> Failure {
    Failure::Usage(e.to_string())
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 {
                stdout.write_all(text.as_bytes())
            } else {
                stderr.write_all(text.as_bytes())
            };
            return code;
        }
    };
    match execute(&cli) {
        Ok((text, passed)) => match emit(&cli.common, &text, stdout) {
            Ok(()) => i32::from(!passed),
            Err(e) => {
                let _ = writeln!(stderr, "error: {e}");
                2
            }
        },
        Err(Failure::Usage(msg)) => {
            let _ = writeln!(stderr, "error: {msg}");
            2
        }
        Err(Failure::Runtime(msg)) => {
            let _ = writeln!(stderr, "error: {msg}");
            1
        }
    }
}

fn emit(common: &Common, text: &str, stdout: &mut dyn Write) -> std::io::Result<()> {
    match &common.out {
        Some(path) => std::fs::write(path, text),
        None => stdout.write_all(text.as_bytes()),
    }
}

fn execute(cli: &Cli) -> CliResult<(String, bool)> {
    let c = &cli.common;
    if c.threads == Some(0) {
        return Err(usage("--threads must be at least 1"));
    }
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = c.threads {
        pool = pool.num_threads(n);
    }
    let pool = pool.build().map_err(usage)?;
    pool.install(|| match &cli.command {
        Command::VerifyBuchstab { points, step, u_max } => verify_buchstab(c, *points, *step, *u_max),
        Command::EvalRegion { region, coords } => eval_region(c, region, coords),
        Command::Estimate { spec } => estimate_cmd(c, spec),
        Command::VerifyLoss => verify_loss(c),
        Command::Sensitivity => sensitivity_cmd(c),
        Command::Oracle { spec, points } => oracle(c, spec, *points),
    })
}

fn json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("report serializes");
    s.push('\n');
    s
}

fn load_specs(c: &Common) -> CliResult<Vec<IntegralSpec>> {
    match &c.specs {
        Some(dir) => load_specs_from_dir(dir).map_err(usage),
        None => Ok(builtin_specs()),
    }
}

/// A built-in name, a name found in `--specs`, or a path to a spec file.
fn resolve_spec(c: &Common, name: &str) -> CliResult<IntegralSpec> {
    let path = Path::new(name);
    if name.ends_with(".spec") || path.is_file() {
        let src = std::fs::read_to_string(path).map_err(|e| usage(format!("{name}: {e}")))?;
        return parse(&src).map_err(|e| usage(format!("{name}: {e}")));
    }
    load_specs(c)?
        .into_iter()
        .find(|s| s.name == name)
        .ok_or_else(|| usage(format!("unknown integral {name:?}")))
}

fn run_options(c: &Common) -> RunOptions {
    let mut opts = RunOptions::new(c.profile.into(), c.seed);
    opts.blocks = c.blocks;
    opts.samples = c.samples;
    opts.stratify = c.stratify;
    if c.strict {
        opts.eval.partition = Partition::NonEmpty;
    }
    opts
}

#[derive(Debug, Serialize)]
struct Check {
    name: &'static str,
    passed: bool,
    max_error: f64,
    tolerance: f64,
}

#[derive(Debug, Serialize)]
struct BuchstabReport {
    step: f64,
    u_max: f64,
    points: usize,
    seed: u64,
    checks: Vec<Check>,
}

fn closed_form(u: f64) -> f64 {
    if u < 2.0 {
        1.0 / u
    } else if u < 3.0 {
        (1.0 + (u - 1.0).ln()) / u
    } else {
        mid_closed_form(u)
    }
}

fn verify_buchstab(c: &Common, points: usize, step: f64, u_max: f64) -> CliResult<(String, bool)> {
    if points == 0 {
        return Err(usage("--points must be positive"));
    }
    let table = BuchstabTable::build(u_max, step).map_err(usage)?;
    let mut rng = ChaCha8Rng::seed_from_u64(c.seed);
    let tol = 1e-6;
    let mut exact = 0.0f64;
    for _ in 0..points {
        let u = rng.random_range(1.0..=4.0);
        exact = exact.max((table.value(u) - closed_form(u)).abs());
    }
    let mut tail = 0.0f64;
    for (k, &w) in table.values().iter().enumerate() {
        if table.grid_point(k) >= 4.0 {
            tail = tail.max(TAIL_LOWER - w).max(w - TAIL_UPPER);
        }
    }
    let (mut sandwich, mut simple) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for _ in 0..points {
        let u = rng.random_range(1.0..=35.0);
        let w = table.value(u);
        let lo = omega_lower(u).map_err(|e| Failure::Runtime(e.to_string()))?;
        let hi = omega_upper(u).map_err(|e| Failure::Runtime(e.to_string()))?;
        let s = omega_simple_upper(u).map_err(|e| Failure::Runtime(e.to_string()))?;
        sandwich = sandwich.max(lo - w).max(w - hi);
        simple = simple.max(w - s);
    }
    let checks = vec![
        Check {
            name: "closed_forms_on_1_4",
            passed: exact <= tol,
            max_error: exact,
            tolerance: tol,
        },
        Check {
            name: "tail_within_printed_bounds",
            passed: tail <= 0.0,
            max_error: tail.max(0.0),
            tolerance: 0.0,
        },
        Check {
            name: "lower_upper_sandwich",
            passed: sandwich <= tol,
            max_error: sandwich.max(0.0),
            tolerance: tol,
        },
        Check {
            name: "simple_bound",
            passed: simple <= tol,
            max_error: simple.max(0.0),
            tolerance: tol,
        },
    ];
    let passed = checks.iter().all(|k| k.passed);
    let report = BuchstabReport {
        step,
        u_max,
        points,
        seed: c.seed,
        checks,
    };
    let text = match c.format {
        Format::Json => json(&report),
        Format::Csv => {
            let mut s = String::from("check,passed,max_error,tolerance\n");
            for k in &report.checks {
                writeln!(s, "{},{},{:e},{:e}", k.name, k.passed, k.max_error, k.tolerance).unwrap();
            }
            s
        }
        Format::Text => {
            let mut s = String::new();
            for k in &report.checks {
                let mark = if k.passed { "PASS" } else { "FAIL" };
                writeln!(s, "{mark} {:28} max error {:.3e} (tolerance {:.1e})", k.name, k.max_error, k.tolerance).unwrap();
            }
            s
        }
    };
    Ok((text, passed))
}

/// Region name to predicate; `I3`, `J5` and the like fix the dimension.
fn region_atom(name: &str) -> CliResult<(Atom, Option<usize>)> {
    if let Some(atom) = Atom::parse_keyword(name) {
        return Ok((atom, None));
    }
    let (head, digits) = name.split_at(1.min(name.len()));
    let atom = match head {
        "I" => Atom::I,
        "J" => Atom::J,
        _ => return Err(usage(format!("unknown region {name:?}"))),
    };
    let n = digits.parse::<usize>().map_err(|_| usage(format!("unknown region {name:?}")))?;
    Ok((atom, Some(n)))
}

fn exact(r: num::rational::Ratio<i64>) -> BigRational {
    BigRational::new(BigInt::from(*r.numer()), BigInt::from(*r.denom()))
}

fn eval_region(c: &Common, region: &str, coords: &[String]) -> CliResult<(String, bool)> {
    let (atom, fixed) = region_atom(region)?;
    let values = coords
        .iter()
        .map(|s| {
            parse_expr(s)
                .ok()
                .and_then(|e| e.constant())
                .ok_or_else(|| usage(format!("coordinate {s:?} is not a number")))
        })
        .collect::<CliResult<Vec<_>>>()?;
    let n = values.len();
    if fixed.is_some_and(|d| d != n) || !atom.arity().contains(&n) {
        return Err(usage(format!("{region} does not take {n} coordinates")));
    }
    let p = if c.strict { Partition::NonEmpty } else { Partition::AllowEmpty };
    let q: Vec<BigRational> = values.iter().copied().map(exact).collect();
    let member = match atom {
        Atom::T0 => regions::in_t0(&q[0], &q[1]),
        Atom::T1 => regions::in_t1(&q[0], &q[1]),
        Atom::T2 => regions::in_t2(&q[0], &q[1], &q[2]),
        Atom::T21 => regions::in_t21(&q[0], &q[1], &q[2]),
        Atom::T22 => regions::in_t22(&q[0], &q[1], &q[2]),
        Atom::T23 => regions::in_t23(&q[0], &q[1], &q[2]),
        Atom::I => regions::in_i_with(&q, p),
        Atom::J => regions::in_j_with(&q, p),
        Atom::L => regions::in_l_with(&q[0], &q[1], p),
        Atom::M => regions::in_m_with(&q[0], &q[1], p),
        Atom::N => regions::in_n_with(&q[0], &q[1], p),
        Atom::U(_) => {
            let f: Vec<f64> = values.iter().map(|r| *r.numer() as f64 / *r.denom() as f64).collect();
            atom.holds(&f, p)
        }
    };
    let text = match c.format {
        Format::Text => format!("{member}\n"),
        Format::Csv => format!("region,member\n{region},{member}\n"),
        Format::Json => json(&serde_json::json!({ "region": region, "coordinates": coords, "member": member })),
    };
    Ok((text, true))
}

#[derive(Debug, Serialize)]
struct EstimateReport {
    name: String,
    mean: f64,
    std_error: f64,
    n_samples: u64,
    n_feasible: u64,
    seed: u64,
    blocks: usize,
    empty_region: bool,
    paper_value: f64,
    tolerance: f64,
    verdict: Verdict,
}

fn estimate_report(spec: &IntegralSpec, e: &IntegralEstimate, blocks: usize) -> EstimateReport {
    let paper_value = spec.paper_value_f64();
    let (tolerance, verdict) = judge(paper_value, e.mean, e.std_error);
    EstimateReport {
        name: spec.name.clone(),
        mean: e.mean,
        std_error: e.std_error,
        n_samples: e.n_samples,
        n_feasible: e.n_feasible,
        seed: e.seed,
        blocks,
        empty_region: e.empty_region,
        paper_value,
        tolerance,
        verdict,
    }
}

fn run_estimate(c: &Common, spec: &IntegralSpec) -> CliResult<IntegralEstimate> {
    let opts = run_options(c);
    let cfg: EstimateConfig = opts.config_for(spec);
    let table = BuchstabTable::with_defaults();
    estimate_with(spec, &table, &cfg).map_err(|e| match e {
        crate::quadrature::QuadError::Arguments(m) => Failure::Usage(m),
        other => Failure::Runtime(other.to_string()),
    })
}

fn estimate_cmd(c: &Common, name: &str) -> CliResult<(String, bool)> {
    let spec = resolve_spec(c, name)?;
    let e = run_estimate(c, &spec)?;
    let r = estimate_report(&spec, &e, c.blocks);
    let text = match c.format {
        Format::Json => json(&r),
        Format::Csv => format!(
            "name,mean,std_error,n_samples,n_feasible,seed,paper_value,verdict\n{},{},{},{},{},{},{},{}\n",
            r.name, r.mean, r.std_error, r.n_samples, r.n_feasible, r.seed, r.paper_value, r.verdict
        ),
        Format::Text => format!(
            "{}\n  mean        {:.6}\n  std_error   {:.6}\n  samples     {} ({} feasible, {} blocks, seed {})\n  paper       {}\n  verdict     {}\n",
            r.name, r.mean, r.std_error, r.n_samples, r.n_feasible, r.blocks, r.seed, r.paper_value, r.verdict
        ),
    };
    Ok((text, r.verdict != Verdict::Fail))
}

fn sign_symbol(sign: i32) -> char {
    if sign < 0 {
        '-'
    } else {
        '+'
    }
}

/// CSV flattening of the report: one row per component, group and total.
pub fn loss_csv(r: &LossReport) -> String {
    let mut s = String::from("kind,name,group,sign,paper_value,mean,std_error,n_samples,seed,verdict\n");
    for c in &r.components {
        writeln!(
            s,
            "component,{},{},{},{},{},{},{},{},{}",
            c.name, c.group, c.sign, c.paper_value, c.mean, c.std_error, c.n_samples, c.seed, c.verdict
        )
        .unwrap();
    }
    for g in &r.groups {
        writeln!(s, "group,{},{},,{},{},{},,{},{}", g.group, g.group, g.paper, g.estimated, g.std_error, r.seed, g.verdict).unwrap();
    }
    let t = &r.totals;
    writeln!(
        s,
        "total,grand_total,,,{},{},{},,{},{}",
        t.grand_total_paper, t.grand_total_estimated, t.grand_total_std_error, r.seed, t.verdict
    )
    .unwrap();
    s
}

pub fn loss_text(r: &LossReport) -> String {
    let mut s = String::new();
    writeln!(s, "profile {} seed {} blocks {} generator {}", r.profile.name(), r.seed, r.blocks, r.generator).unwrap();
    writeln!(
        s,
        "{:10} {:5} {:4} {:>10} {:>10} {:>10} {:>11}  verdict",
        "component", "group", "sign", "paper", "mean", "std_error", "samples"
    )
    .unwrap();
    for c in &r.components {
        writeln!(
            s,
            "{:10} {:5} {:4} {:>10.6} {:>10.6} {:>10.6} {:>11}  {}",
            c.name,
            c.group,
            sign_symbol(c.sign),
            c.paper_value,
            c.mean,
            c.std_error,
            c.n_samples,
            c.verdict
        )
        .unwrap();
    }
    writeln!(s).unwrap();
    for g in &r.groups {
        writeln!(
            s,
            "group {:4} estimated {:.6} ± {:.6}  paper {:.6}  tolerance {:.6}  {}",
            g.group, g.estimated, g.std_error, g.paper, g.tolerance, g.verdict
        )
        .unwrap();
    }
    let t = &r.totals;
    writeln!(
        s,
        "total      estimated {:.6} ± {:.6}  paper {:.6}  margin {:.6}  {}",
        t.grand_total_estimated, t.grand_total_std_error, t.grand_total_paper, t.margin, t.verdict
    )
    .unwrap();
    writeln!(s, "verdict {}", r.verdict).unwrap();
    s
}

fn verify_loss(c: &Common) -> CliResult<(String, bool)> {
    let specs = load_specs(c)?;
    let table = BuchstabTable::with_defaults();
    let r = run_budget(&specs, &table, &run_options(c)).map_err(budget_failure)?;
    let text = match c.format {
        Format::Json => json(&r),
        Format::Csv => loss_csv(&r),
        Format::Text => loss_text(&r),
    };
    Ok((text, r.verdict != Verdict::Fail))
}

fn budget_failure(e: crate::lossbudget::LossError) -> Failure {
    use crate::lossbudget::LossError;
    use crate::quadrature::QuadError;
    match e {
        LossError::Estimate(QuadError::Arguments(m)) => Failure::Usage(m),
        LossError::NoSpecs => Failure::Usage(e.to_string()),
        other => Failure::Runtime(other.to_string()),
    }
}

fn sensitivity_text(r: &SensitivityReport, csv: bool) -> String {
    let mut s = String::new();
    if csv {
        s.push_str("variant,name,baseline,variant_mean,delta\n");
    }
    for v in &r.variants {
        if !csv {
            writeln!(s, "{} ({}): max |delta| {:.6}, signed total delta {:+.6}", v.name, v.description, v.max_abs_delta, v.total_delta).unwrap();
        }
        for row in &v.rows {
            if csv {
                writeln!(s, "{},{},{},{},{}", v.name, row.name, row.baseline, row.variant, row.delta).unwrap();
            } else {
                writeln!(s, "  {:10} {:>10.6} -> {:>10.6}  {:+.6}", row.name, row.baseline, row.variant, row.delta).unwrap();
            }
        }
    }
    s
}

fn sensitivity_cmd(c: &Common) -> CliResult<(String, bool)> {
    let specs = load_specs(c)?;
    let table = BuchstabTable::with_defaults();
    let r = sensitivity_with(&specs, &table, &run_options(c)).map_err(budget_failure)?;
    let text = match c.format {
        Format::Json => json(&r),
        Format::Csv => sensitivity_text(&r, true),
        Format::Text => sensitivity_text(&r, false),
    };
    Ok((text, true))
}

#[derive(Debug, Serialize)]
struct OracleReport {
    name: String,
    points_per_axis: usize,
    grid: f64,
    mean: f64,
    std_error: f64,
    n_samples: u64,
    tolerance: f64,
    agree: bool,
}

fn oracle(c: &Common, name: &str, points: usize) -> CliResult<(String, bool)> {
    if points < MIN_GRID_POINTS {
        return Err(usage(format!("--points must be at least {MIN_GRID_POINTS}")));
    }
    let spec = resolve_spec(c, name)?;
    let table = BuchstabTable::with_defaults();
    let grid = grid_estimate(&spec, &table, points).map_err(usage)?;
    let e = run_estimate(c, &spec)?;
    let tolerance = (3.0 * e.std_error).max(5e-4);
    let r = OracleReport {
        name: spec.name.clone(),
        points_per_axis: points,
        grid,
        mean: e.mean,
        std_error: e.std_error,
        n_samples: e.n_samples,
        tolerance,
        agree: (grid - e.mean).abs() <= tolerance,
    };
    let text = match c.format {
        Format::Json => json(&r),
        Format::Csv => format!(
            "name,points_per_axis,grid,mean,std_error,tolerance,agree\n{},{},{},{},{},{},{}\n",
            r.name, r.points_per_axis, r.grid, r.mean, r.std_error, r.tolerance, r.agree
        ),
        Format::Text => format!(
            "{}: grid {:.6} ({} per axis), monte carlo {:.6} ± {:.6}, {}\n",
            r.name,
            r.grid,
            r.points_per_axis,
            r.mean,
            r.std_error,
            if r.agree { "agree" } else { "DISAGREE" }
        ),
    };
    Ok((text, r.agree))
}
