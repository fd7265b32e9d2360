//! `mgsched` command-line frontend.
//!
//! Exit codes: 0 success, 1 usage, 2 I/O, 3 validation.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use mgsched::analysis::{run_chain_check, sweep, SweepConfig};
use mgsched::generators::{generate, generate_lower_bound, GenSpec, LowerBoundSpec};
use mgsched::io::{
    ratio_csv_row, read_instance, schedule_csv, write_instance, write_trace, RATIO_CSV_HEADER,
};
use mgsched::policies::{simulate_with, SimOptions};
use mgsched::{
    classify_variants, offline_optimal, Instance64, PolicyKind, PolicyParams64, RatioReport,
    Variant, PHI, PHI_SQUARED,
};

#[derive(Debug, Error)]
enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io { path: String, source: io::Error },
    #[error("{0}")]
    Validation(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Io { .. } => 2,
            CliError::Validation(_) => 3,
        }
    }
}

impl From<mgsched::Error> for CliError {
    fn from(e: mgsched::Error) -> Self {
        use mgsched::Error as E;
        match e {
            E::Io(source) => CliError::Io {
                path: "<stream>".into(),
                source,
            },
            E::InvalidParams(_) | E::InvalidSpec(_) | E::ChainDomain(_) | E::SizeLimit { .. } => {
                CliError::Usage(e.to_string())
            }
            other => CliError::Validation(other.to_string()),
        }
    }
}

type CliResult<T> = Result<T, CliError>;

/// Accepts a number, `inf`, `phi` or `phi2`.
fn parse_param(s: &str) -> Result<f64, String> {
    match s.trim().to_ascii_lowercase().as_str() {
        "inf" | "infinity" | "unbounded" => Ok(f64::INFINITY),
        "phi" => Ok(PHI),
        "phi2" | "phi^2" => Ok(PHI_SQUARED),
        other => other.parse::<f64>().map_err(|e| format!("'{s}': {e}")),
    }
}

#[derive(Parser)]
#[command(
    name = "mgsched",
    version,
    about = "Bounded-delay packet scheduling simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a random instance of a variant
    Gen(GenArgs),
    /// Generate the adversarial lower-bound instance
    Lb(LbArgs),
    /// Simulate a policy on an instance
    Run(RunArgs),
    /// Compute the offline optimum
    Opt(OptArgs),
    /// OPT versus policy as a CSV row
    Ratio(RatioArgs),
    /// Competitive-ratio sweep over variants and policies
    Sweep(SweepArgs),
    /// Property check of the chain bound on random chains
    Chaincheck(ChainArgs),
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, default_value = "general")]
    variant: Variant,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 5)]
    max_slack: i64,
    #[arg(long, default_value_t = 1.0)]
    value_lo: f64,
    #[arg(long, default_value_t = 10.0)]
    value_hi: f64,
    /// Releases are drawn from 1..=SPAN (default max(1, n/2))
    #[arg(long)]
    release_span: Option<i64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct LbArgs {
    #[arg(long)]
    k: u32,
    #[arg(long, default_value_t = LowerBoundSpec::DEFAULT_EPSILON)]
    epsilon: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct PolicyArgs {
    #[arg(long, default_value = "mg")]
    policy: PolicyKind,
    /// Number, `inf`, `phi` or `phi2`
    #[arg(long, default_value = "phi", value_parser = parse_param)]
    alpha: f64,
    #[arg(long, default_value = "phi", value_parser = parse_param)]
    beta: f64,
}

impl PolicyArgs {
    fn params(&self) -> CliResult<PolicyParams64> {
        let p = match self.policy {
            PolicyKind::Greedy => PolicyParams64::greedy(),
            PolicyKind::EdfAlpha => PolicyParams64::edf_alpha(self.alpha)?,
            PolicyKind::Mg => PolicyParams64::mg(self.alpha, self.beta)?,
        };
        Ok(p)
    }
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    instance: PathBuf,
    #[command(flatten)]
    policy: PolicyArgs,
    /// Write the per-step trace (JSON lines) here
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Fail if a provisional schedule is not value-nonincreasing across deadlines
    #[arg(long)]
    check_slack_order: bool,
}

#[derive(Args)]
struct OptArgs {
    #[arg(long)]
    instance: PathBuf,
    /// Write `slot,id` assignments here
    #[arg(long)]
    schedule: Option<PathBuf>,
}

#[derive(Args)]
struct RatioArgs {
    #[arg(long)]
    instance: PathBuf,
    #[command(flatten)]
    policy: PolicyArgs,
    #[arg(long)]
    no_header: bool,
}

#[derive(Args)]
struct SweepArgs {
    /// `all` or a comma-separated list of variant tags
    #[arg(long, default_value = "all")]
    variants: String,
    #[arg(long, default_value_t = 1000)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    #[arg(long, default_value_t = 40)]
    max_n: usize,
    #[arg(long, default_value_t = 5)]
    max_slack: i64,
    #[arg(long, default_value = "mg")]
    policy: PolicyKind,
    /// Comma-separated alpha values; omit to use each variant's default MG parameters
    #[arg(long, value_delimiter = ',', value_parser = parse_param)]
    alpha: Option<Vec<f64>>,
    /// Comma-separated beta values; pairs with beta > alpha are skipped
    #[arg(long, value_delimiter = ',', value_parser = parse_param)]
    beta: Option<Vec<f64>>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also print the summary table to stderr
    #[arg(long)]
    table: bool,
}

#[derive(Args)]
struct ChainArgs {
    #[arg(long, default_value = "phi2", value_parser = parse_param)]
    alpha: f64,
    #[arg(long, default_value_t = 100_000)]
    trials: usize,
    #[arg(long, default_value_t = 12)]
    max_k: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn load(path: &Path) -> CliResult<Instance64> {
    let f = File::open(path).map_err(io_err(path))?;
    let inst = read_instance(BufReader::new(f)).map_err(|e| match e {
        mgsched::Error::Io(source) => CliError::Io {
            path: path.display().to_string(),
            source,
        },
        other => CliError::Validation(format!("{}: {other}", path.display())),
    })?;
    let violations = mgsched::validate_instance(&inst);
    if !violations.is_empty() {
        return Err(mgsched::Error::InvalidInstance(violations).into());
    }
    Ok(inst)
}

fn write_to(
    path: &Path,
    f: impl FnOnce(&mut BufWriter<File>) -> mgsched::Result<()>,
) -> CliResult<()> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    f(&mut w).map_err(|e| match e {
        mgsched::Error::Io(source) => CliError::Io {
            path: path.display().to_string(),
            source,
        },
        other => other.into(),
    })?;
    w.flush().map_err(io_err(path))
}

/// Writes an instance to `out` (or stdout) and a summary to stdout (or stderr).
fn emit_instance(inst: &Instance64, out: Option<&Path>) -> CliResult<()> {
    let mut summary = format!("packets: {}\n", inst.len());
    for (v, flag) in classify_variants(inst).flags() {
        summary.push_str(&format!("{}: {}\n", v.tag(), flag));
    }
    match out {
        Some(path) => {
            write_to(path, |w| write_instance(inst, w))?;
            print!("{summary}");
        }
        None => {
            write_instance(inst, io::stdout().lock())?;
            eprint!("{summary}");
        }
    }
    Ok(())
}

fn instance_label(path: &Path, inst: &Instance64) -> (String, String) {
    let id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let variant = inst
        .meta
        .as_ref()
        .and_then(|m| m.variant.clone())
        .unwrap_or_else(|| "unknown".into());
    (id, variant)
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Gen(a) => {
            let spec = GenSpec {
                variant: a.variant,
                n: a.n,
                max_slack: a.max_slack,
                value_range: (a.value_lo, a.value_hi),
                seed: a.seed,
                release_span: a.release_span,
            };
            let inst: Instance64 = generate(&spec)?;
            emit_instance(&inst, a.out.as_deref())
        }
        Command::Lb(a) => {
            let lb = generate_lower_bound::<f64>(&LowerBoundSpec {
                k: a.k,
                epsilon: a.epsilon,
            })?;
            emit_instance(&lb.instance, a.out.as_deref())
        }
        Command::Run(a) => {
            let inst = load(&a.instance)?;
            let params = a.policy.params()?;
            let opts = SimOptions {
                check_slack_order: a.check_slack_order,
            };
            let trace = simulate_with(&inst, &params, opts)?;
            if let Some(path) = &a.trace {
                write_to(path, |w| write_trace(&trace, w))?;
            }
            println!("policy: {params}");
            println!("total_value: {}", trace.total_value);
            println!("sent: {}", trace.sent_count());
            println!("dropped: {}", trace.dropped_expired.len());
            Ok(())
        }
        Command::Opt(a) => {
            let inst = load(&a.instance)?;
            let s = offline_optimal(&inst)?;
            if let Some(path) = &a.schedule {
                let text = schedule_csv(&s);
                write_to(path, |w| Ok(w.write_all(text.as_bytes())?))?;
            }
            println!("opt_value: {}", s.total_value);
            println!("sent: {}", s.assignments.len());
            Ok(())
        }
        Command::Ratio(a) => {
            let inst = load(&a.instance)?;
            let params = a.policy.params()?;
            let report: RatioReport<f64> = mgsched::empirical_ratio(&inst, &params)?;
            let (id, variant) = instance_label(&a.instance, &inst);
            if !a.no_header {
                println!("{RATIO_CSV_HEADER}");
            }
            println!("{}", ratio_csv_row(&id, &variant, &params, &report));
            Ok(())
        }
        Command::Sweep(a) => {
            let variants: Vec<Variant> = if a.variants.trim() == "all" {
                Variant::ALL.to_vec()
            } else {
                a.variants
                    .split(',')
                    .map(|s| s.parse::<Variant>().map_err(CliError::Usage))
                    .collect::<CliResult<_>>()?
            };
            let mut cfg = match (a.policy, &a.alpha) {
                (PolicyKind::Mg, None) => {
                    if a.beta.is_some() {
                        return Err(CliError::Usage("--beta requires --alpha".into()));
                    }
                    SweepConfig::defaults(&variants, a.trials, a.seed)
                }
                (PolicyKind::Greedy, _) => {
                    SweepConfig::grid(&variants, &[PolicyParams64::greedy()], a.trials, a.seed)
                }
                (PolicyKind::EdfAlpha, alphas) => {
                    let grid = alphas
                        .clone()
                        .unwrap_or_else(|| vec![PHI])
                        .into_iter()
                        .map(PolicyParams64::edf_alpha)
                        .collect::<mgsched::Result<Vec<_>>>()?;
                    SweepConfig::grid(&variants, &grid, a.trials, a.seed)
                }
                (PolicyKind::Mg, Some(alphas)) => {
                    let betas = a.beta.clone().unwrap_or_else(|| vec![1.0]);
                    let mut grid = Vec::new();
                    for &al in alphas {
                        for &be in &betas {
                            if be <= al {
                                grid.push(PolicyParams64::mg(al, be)?);
                            }
                        }
                    }
                    if grid.is_empty() {
                        return Err(CliError::Usage(
                            "no (alpha, beta) pair with beta <= alpha".into(),
                        ));
                    }
                    SweepConfig::grid(&variants, &grid, a.trials, a.seed)
                }
            };
            if a.max_n == 0 {
                return Err(CliError::Usage("--max-n must be >= 1".into()));
            }
            cfg.max_n = a.max_n;
            cfg.max_slack = a.max_slack;
            cfg.jobs = a.jobs;
            let report = sweep(&cfg)?;
            let csv = report.to_csv();
            match &a.out {
                Some(path) => write_to(path, |w| Ok(w.write_all(csv.as_bytes())?))?,
                None => print!("{csv}"),
            }
            if a.table {
                eprint!("{}", report.to_table());
            }
            Ok(())
        }
        Command::Chaincheck(a) => {
            let s = run_chain_check(a.alpha, a.trials, a.max_k, a.seed)?;
            println!("alpha: {}", s.alpha);
            println!("trials: {}", s.trials);
            println!("max_k: {}", s.max_k);
            println!("max_ratio_to_bound: {}", s.max_ratio_to_bound);
            println!("extremal_min_tightness: {}", s.extremal_min_tightness);
            if a.alpha == PHI_SQUARED {
                println!("phi_violations: {}", s.phi_violations);
            }
            println!("{} violations", s.violations + s.phi_violations);
            if s.violations + s.phi_violations > 0 {
                return Err(CliError::Validation("chain bound violated".into()));
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
