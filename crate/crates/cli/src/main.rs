//! `kmreg`: reproducible, seedable front end for the rate-bound library.
//!
//! Every subcommand that writes to a file also drops a `RunManifest` next to
//! it; `kmreg replay <manifest>` re-executes the recorded invocation and
//! reproduces byte-identical numeric output.
//!
//! Exit codes: 0 success, 1 usage error, 2 property violation (a failed
//! bound or residual check signals a library bug, not user error).

mod manifest;
mod schedule;
mod verify;

use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use kmreg::bounds::{
    c_table, h_envelope, pn_exact, pn_recursion, recurrence_check,
};
use kmreg::km::{
    certify_diameter, km_iterate, shift_sharpness_experiment, sharpness_optimal_u, OperatorSpec,
};
use kmreg::rng::RngStream;
use kmreg::stochastic::simulate_walk_nonneg;
use kmreg::{Error as KmError, INV_SQRT_PI};

use manifest::{OutputRecord, RunManifest};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Parser)]
#[command(name = "kmreg", version, about = "KM iteration rate bounds, verified numerically")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Clone)]
enum Command {
    /// Evaluate the rate product sqrt(sum alpha_i(1-alpha_i)) * P^n.
    Rate {
        /// Schedule source: const:A | two-block:M,U | uniform-random |
        /// file:PATH | json:{...}
        #[arg(long)]
        schedule: String,
        #[arg(long)]
        n: usize,
        #[arg(long, value_enum, default_value = "exact")]
        method: Method,
        #[arg(long, default_value_t = 100_000)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
    },
    /// Emit the triangular c_{mn} table as CSV.
    Ctable {
        #[arg(long)]
        schedule: String,
        #[arg(long)]
        n_max: usize,
        /// Append the three-term recurrence residual and fail if it exceeds
        /// 1e-10.
        #[arg(long)]
        check: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Tabulate the Bessel envelope h(z) on a log-spaced grid.
    Envelope {
        #[arg(long)]
        z_min: f64,
        #[arg(long)]
        z_max: f64,
        #[arg(long, default_value_t = 200)]
        points: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the l1 right-shift sharpness experiment for a list of m values.
    Sharpness {
        /// Comma-separated m values, each <= 5000.
        #[arg(long)]
        m_list: String,
        /// Interior probability parameter; defaults to the eta-optimal value.
        #[arg(long)]
        u: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a named property suite with random instances.
    Verify {
        #[arg(long, value_enum)]
        suite: Suite,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        cases: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the KM iteration for an operator described in JSON and certify
    /// the final residual.
    Iterate {
        /// Operator spec: inline JSON or @path to a JSON file.
        #[arg(long)]
        operator: String,
        #[arg(long)]
        schedule: String,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-execute a recorded run manifest.
    Replay {
        manifest: PathBuf,
        /// Optional new output path (defaults to the recorded one).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(ValueEnum, Clone, Copy, PartialEq, Eq)]
enum Method {
    Recursion,
    Exact,
    Mc,
}

impl Method {
    fn label(self) -> &'static str {
        match self {
            Self::Recursion => "recursion",
            Self::Exact => "exact",
            Self::Mc => "mc",
        }
    }
}

#[derive(ValueEnum, Clone, Copy, PartialEq, Eq)]
enum Format {
    Json,
    Csv,
}

#[derive(ValueEnum, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Hoeffding,
    Catalan,
    Turan,
    IdentityHilbert,
    TripleAgreement,
}

impl Suite {
    fn label(self) -> &'static str {
        match self {
            Self::Hoeffding => "hoeffding",
            Self::Catalan => "catalan",
            Self::Turan => "turan",
            Self::IdentityHilbert => "identity_hilbert",
            Self::TripleAgreement => "triple_agreement",
        }
    }
}

/// Errors carrying their exit code.
pub enum CliError {
    Usage(String),
    Violation(String),
}

impl From<KmError> for CliError {
    fn from(e: KmError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Usage(format!("io error: {e}"))
    }
}

pub type CliResult<T> = Result<T, CliError>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap handles --help/--version as "errors" with exit code 0
            if e.use_stderr() {
                eprintln!("{e}");
                return ExitCode::from(1);
            }
            print!("{e}");
            return ExitCode::SUCCESS;
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Violation(msg)) => {
            eprintln!("property violation: {msg}");
            ExitCode::from(2)
        }
    }
}

/// 17-significant-digit decimal form, stable across runs.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn write_output(out: Option<&PathBuf>, content: &str) -> CliResult<()> {
    match out {
        Some(path) => std::fs::write(path, content)?,
        None => print!("{content}"),
    }
    Ok(())
}

fn emit(
    out: Option<&PathBuf>,
    content: &str,
    manifest: RunManifest,
) -> CliResult<()> {
    write_output(out, content)?;
    if let Some(path) = out {
        let mpath = manifest::manifest_path(path);
        std::fs::write(&mpath, manifest.to_json())?;
    }
    Ok(())
}

fn run(command: Command) -> CliResult<()> {
    match command.clone() {
        Command::Rate { schedule, n, method, trials, seed, out, format } => {
            let sched = schedule::parse(&schedule, n + 1, seed)?;
            if n > sched.len() {
                return Err(CliError::Usage(format!(
                    "n = {n} exceeds schedule length {}",
                    sched.len()
                )));
            }
            let mut std_err = None;
            let pn = match method {
                Method::Exact => pn_exact(&sched, n),
                Method::Recursion => match pn_recursion(&sched, n) {
                    Ok(v) => v,
                    // alpha_{n+1} = 0 makes the recursion route 0/0; the
                    // ballot-expectation route is defined for all schedules
                    Err(KmError::ZeroRelaxation(_)) => pn_exact(&sched, n),
                    Err(e) => return Err(e.into()),
                },
                Method::Mc => {
                    let est = simulate_walk_nonneg(
                        sched.alphas(),
                        n,
                        trials,
                        RngStream::new(seed),
                    );
                    std_err = Some(est.std_err);
                    est.estimate
                }
            };
            let sum_s = sched.sum_s(n);
            let product = sum_s.sqrt() * pn;
            // MC noise can poke above the bound; only exact routes count as
            // violations
            let slack = std_err.map_or(1e-10, |se| 4.0 * se + 1e-10);
            let bound_ok = product <= INV_SQRT_PI + slack * sum_s.sqrt().max(1.0);
            let value = json!({
                "n": n,
                "sum_s": sum_s,
                "pn": pn,
                "product": product,
                "bound_ok": bound_ok,
                "std_err": std_err,
            });
            let content = match format {
                Format::Json => render_json("rate_report", value.clone(), method.label(), &command, seed),
                Format::Csv => {
                    let mut s = String::from("n,sum_s,pn,product,bound_ok,std_err\n");
                    let _ = writeln!(
                        s,
                        "{n},{},{},{},{bound_ok},{}",
                        fmt_f64(sum_s),
                        fmt_f64(pn),
                        fmt_f64(product),
                        std_err.map(fmt_f64).unwrap_or_default()
                    );
                    s
                }
            };
            let manifest = RunManifest::new("rate", &command, seed)
                .with_output(OutputRecord::new("rate_report", value, method.label()));
            emit(out.as_ref(), &content, manifest)?;
            if !bound_ok {
                return Err(CliError::Violation(format!(
                    "rate product {product} exceeds 1/sqrt(pi)"
                )));
            }
            Ok(())
        }
        Command::Ctable { schedule, n_max, check, seed, out } => {
            if n_max > 200 {
                return Err(CliError::Usage("n_max must be <= 200".into()));
            }
            let sched = schedule::parse(&schedule, n_max, seed)?;
            if n_max > sched.len() {
                return Err(CliError::Usage(format!(
                    "n_max = {n_max} exceeds schedule length {}",
                    sched.len()
                )));
            }
            let table = c_table(&sched, n_max);
            let mut csv = String::from("m,n,c_mn\n");
            for n in 0..=n_max {
                for m in -1..=(n as isize) {
                    let _ = writeln!(csv, "{m},{n},{}", fmt_f64(table.get(m, n)));
                }
            }
            let mut residual = None;
            if check {
                let r = recurrence_check(&table, &sched);
                let _ = writeln!(csv, "# max_recurrence_residual,{}", fmt_f64(r));
                residual = Some(r);
            }
            let manifest = RunManifest::new("ctable", &command, seed).with_output(
                OutputRecord::new(
                    "c_table",
                    json!({"n_max": n_max, "recurrence_residual": residual}),
                    "double-sum-recursion",
                ),
            );
            emit(out.as_ref(), &csv, manifest)?;
            if let Some(r) = residual {
                if r > 1e-10 {
                    return Err(CliError::Violation(format!("recurrence residual {r} > 1e-10")));
                }
            }
            Ok(())
        }
        Command::Envelope { z_min, z_max, points, out } => {
            if !(0.0 < z_min && z_min < z_max) || points < 2 {
                return Err(CliError::Usage(
                    "need 0 < z_min < z_max and at least two points".into(),
                ));
            }
            let grid: Vec<f64> = (0..points)
                .map(|i| {
                    z_min * (z_max / z_min).powf(i as f64 / (points - 1) as f64)
                })
                .collect();
            let values: Vec<f64> = grid.iter().map(|&z| h_envelope(z)).collect();
            if let Some(w) = values.windows(2).find(|w| w[1] <= w[0]) {
                return Err(CliError::Violation(format!(
                    "h(z) not increasing: {} then {}",
                    w[0], w[1]
                )));
            }
            let mut csv = String::from("z,h\n");
            for (z, h) in grid.iter().zip(&values) {
                let _ = writeln!(csv, "{},{}", fmt_f64(*z), fmt_f64(*h));
            }
            let manifest = RunManifest::new("envelope", &command, 0).with_output(
                OutputRecord::new(
                    "h_envelope",
                    json!({"z_min": z_min, "z_max": z_max, "points": points,
                           "h_first": values.first(), "h_last": values.last()}),
                    "scaled-bessel",
                ),
            );
            emit(out.as_ref(), &csv, manifest)
        }
        Command::Sharpness { m_list, u, out } => {
            let ms: Vec<usize> = m_list
                .split(',')
                .map(|s| s.trim().parse::<usize>())
                .collect::<Result<_, _>>()
                .map_err(|e| CliError::Usage(format!("bad m list: {e}")))?;
            if ms.iter().any(|&m| m == 0 || m > 5000) {
                return Err(CliError::Usage("m values must lie in 1..=5000".into()));
            }
            let u = u.unwrap_or_else(sharpness_optimal_u);
            let mut csv = String::from("m,observed,eta,gap\n");
            let mut rows = Vec::new();
            for &m in &ms {
                let r = shift_sharpness_experiment(m, u)?;
                let _ = writeln!(
                    csv,
                    "{m},{},{},{}",
                    fmt_f64(r.observed),
                    fmt_f64(r.eta),
                    fmt_f64(r.gap)
                );
                rows.push(json!({"m": m, "observed": r.observed, "eta": r.eta, "gap": r.gap}));
            }
            let manifest = RunManifest::new("sharpness", &command, 0).with_output(
                OutputRecord::new("sharpness", json!({"u": u, "rows": rows}), "exact-pmf"),
            );
            emit(out.as_ref(), &csv, manifest)
        }
        Command::Verify { suite, seed, cases, out } => {
            let report = verify::run_suite(suite, seed, cases);
            let content = report.render();
            let manifest = RunManifest::new("verify", &command, seed).with_output(
                OutputRecord::new(
                    suite.label(),
                    json!({"cases": report.total(), "failures": report.failures()}),
                    "property-suite",
                ),
            );
            emit(out.as_ref(), &content, manifest)?;
            if report.failures() > 0 {
                return Err(CliError::Violation(format!(
                    "{} of {} cases failed in suite {}",
                    report.failures(),
                    report.total(),
                    suite.label()
                )));
            }
            Ok(())
        }
        Command::Iterate { operator, schedule, n, seed, out } => {
            let spec_text = if let Some(path) = operator.strip_prefix('@') {
                std::fs::read_to_string(path)?
            } else {
                operator.clone()
            };
            let spec: OperatorSpec = serde_json::from_str(&spec_text)
                .map_err(|e| CliError::Usage(format!("bad operator spec: {e}")))?;
            let op = spec.build();
            let sched = schedule::parse(&schedule, n, seed)?;
            let trace = km_iterate(&op, op.default_start(), &sched, n)?;
            let certificate = op
                .declared_diameter
                .map(|d| certify_diameter(&trace, d))
                .transpose()
                .map_err(|e| CliError::Violation(e.to_string()))?;
            let value = json!({
                "n": n,
                "residuals": trace.residuals,
                "final_residual": trace.last_residual(),
                "certificate": certificate,
            });
            let content = render_json("km_trace", value.clone(), "km-iterate", &command, seed);
            let manifest = RunManifest::new("iterate", &command, seed)
                .with_output(OutputRecord::new("km_trace", value, "km-iterate"));
            emit(out.as_ref(), &content, manifest)
        }
        Command::Replay { manifest, out } => {
            let recorded = RunManifest::load(&manifest)?;
            let mut argv = vec!["kmreg".to_string()];
            argv.extend(recorded.argv.clone());
            if let Some(new_out) = out {
                let mut filtered = Vec::new();
                let mut skip = false;
                for a in argv {
                    if skip {
                        skip = false;
                        continue;
                    }
                    if a == "--out" {
                        skip = true;
                        continue;
                    }
                    filtered.push(a);
                }
                argv = filtered;
                argv.push("--out".into());
                argv.push(new_out.display().to_string());
            }
            let replayed = Cli::try_parse_from(&argv)
                .map_err(|e| CliError::Usage(format!("manifest does not replay: {e}")))?;
            run(replayed.command)
        }
    }
}

fn render_json(
    quantity: &str,
    value: serde_json::Value,
    method: &str,
    command: &Command,
    seed: u64,
) -> String {
    // drop --out so replaying to a different path still reproduces the
    // content byte for byte
    let mut params = manifest::command_argv(command);
    if let Some(i) = params.iter().position(|a| a == "--out") {
        params.drain(i..i + 2);
    }
    let envelope = json!({
        "quantity": quantity,
        "value": value,
        "method": method,
        "params": params,
        "seed": seed,
        "version": VERSION,
    });
    let mut s = serde_json::to_string_pretty(&envelope).expect("serializable");
    s.push('\n');
    s
}

