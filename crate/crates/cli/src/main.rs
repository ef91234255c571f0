//! `realwdvv` command-line tool.
//!
//! Exit codes:
//!
//! | code | meaning |
//! |------|---------|
//! | 0    | success |
//! | 1    | a check failed, or an internal consistency error |
//! | 2    | some invariants stayed unresolved (partial table still written) |
//! | 3    | inconsistent system, nonlinear frontier or missing complex value |
//! | 64   | usage error |
//! | 66   | unreadable or malformed input file |

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use realwdvv::complex_gw::{self, ComplexProvider};
use realwdvv::config::{self, ConfigFile, RunConfig};
use realwdvv::lattice::SurfaceKind;
use realwdvv::solver::{self, NonlinearPolicy, SolveOptions, DEFAULT_LOOKAHEAD};
use realwdvv::table_io::{self, TableFormat};
use realwdvv::{relations, verify, Error, Seeds};

const EXIT_CHECK_FAILED: u8 = 1;
const EXIT_UNRESOLVED: u8 = 2;
const EXIT_UNSOLVABLE: u8 = 3;
const EXIT_USAGE: u8 = 64;
const EXIT_NO_INPUT: u8 = 66;

#[derive(Parser)]
#[command(
    name = "realwdvv",
    version,
    about = "Exact real and complex genus-0 invariants of P2 and its real blowups"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve for the real invariants and write the table.
    Compute(ComputeArgs),
    /// Solve, then run the residual, integrality, cross-subset and expected-value checks.
    Check(CheckArgs),
    /// Convert a computed table between CSV and JSON.
    Export(ExportArgs),
}

#[derive(Args)]
struct RunArgs {
    /// `p2` or `blowup:R`.
    #[arg(long)]
    surface: Option<String>,
    /// Largest c1-degree reported.
    #[arg(long = "max-degree")]
    max_degree: Option<i64>,
    /// JSON configuration file; flags take precedence over it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// JSON file of divisor triples.
    #[arg(long)]
    triples: Option<PathBuf>,
    /// Complex invariants, one `coeffs… : value` per line.
    #[arg(long = "complex-table")]
    complex_table: Option<PathBuf>,
    /// Fall back to Kontsevich's recursion for classes d·L missing from the table.
    #[arg(long = "kontsevich-fallback")]
    kontsevich_fallback: bool,
    /// Real seeds, one `coeffs… l : value` per line; replaces the defaults.
    #[arg(long)]
    seeds: Option<PathBuf>,
    /// Complex-invariant cache, read if present and rewritten after the run.
    #[arg(long)]
    cache: Option<PathBuf>,
    /// Park equations with products of unknowns instead of aborting.
    #[arg(long = "defer-nonlinear")]
    defer_nonlinear: bool,
    /// Extra stages solved past the bound.
    #[arg(long, default_value_t = DEFAULT_LOOKAHEAD)]
    lookahead: i64,
}

#[derive(Args)]
struct ComputeArgs {
    #[command(flatten)]
    run: RunArgs,
    #[arg(long, default_value = "csv")]
    emit: TableFormat,
    /// Table destination; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Solve report (JSON) destination.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Writes every relation instance as JSON.
    #[arg(long = "dump-instances")]
    dump_instances: Option<PathBuf>,
}

#[derive(Args)]
struct CheckArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Check report (JSON) destination.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Print the JSON report on stdout instead of the summary.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct ExportArgs {
    /// Table produced by `compute`, CSV or JSON.
    #[arg(long = "in")]
    input: PathBuf,
    /// Output format; defaults to the other one.
    #[arg(long)]
    emit: Option<TableFormat>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Replace values by their absolute values.
    #[arg(long = "abs-only")]
    abs_only: bool,
}

enum Failure {
    Usage(String),
    Core(Error),
    Code(u8),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::InconsistentSystem { .. } | Error::NonlinearFrontier { .. } | Error::MissingComplexValue(_) => {
            EXIT_UNSOLVABLE
        }
        Error::InvalidModel(_) | Error::InvalidDegree(_) => EXIT_USAGE,
        Error::Parse { .. }
        | Error::ConflictingEntry { .. }
        | Error::Io { .. }
        | Error::Json(_)
        | Error::InvalidClass { .. }
        | Error::InvalidDivisorTriple(_) => EXIT_NO_INPUT,
        _ => EXIT_CHECK_FAILED,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    let result = match cli.command {
        Command::Compute(a) => compute(a),
        Command::Check(a) => check(a),
        Command::Export(a) => export(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(Failure::Core(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
        Err(Failure::Code(c)) => ExitCode::from(c),
    }
}

/// Resolves flags, config file and defaults into a run configuration and a
/// complex provider.
fn prepare(args: &RunArgs) -> Result<(RunConfig, ComplexProvider), Failure> {
    let file = match &args.config {
        Some(p) => ConfigFile::load(p)?,
        None => ConfigFile::default(),
    };
    let surface: SurfaceKind = match (&args.surface, file.surface()?) {
        (Some(s), _) => s.parse().map_err(|e: Error| Failure::Usage(e.to_string()))?,
        (None, Some(k)) => k,
        (None, None) => return Err(Failure::Usage("--surface is required (flag or config file)".into())),
    };
    let bound = args
        .max_degree
        .or(file.max_degree)
        .ok_or_else(|| Failure::Usage("--max-degree is required (flag or config file)".into()))?;
    if bound < 0 {
        return Err(Failure::Usage(format!(
            "--max-degree must be non-negative, got {bound}"
        )));
    }
    if args.lookahead < 0 {
        return Err(Failure::Usage(format!(
            "--lookahead must be non-negative, got {}",
            args.lookahead
        )));
    }
    let model = surface.build().map_err(|e| Failure::Usage(e.to_string()))?;
    let mut config = RunConfig::new(model, bound)?;
    let raw_triples = match &args.triples {
        Some(p) => Some(config::load_triples(p)?),
        None => file.divisor_triples.clone(),
    };
    if let Some(raw) = raw_triples {
        config.triples = config::build_triples(&config.model, &raw)?;
    }
    if let Some(p) = &args.seeds {
        config.seeds = Seeds::load(p, &config.model)?;
    }
    config.options = SolveOptions {
        nonlinear: if args.defer_nonlinear {
            NonlinearPolicy::Defer
        } else {
            NonlinearPolicy::Abort
        },
        lookahead: args.lookahead,
    };

    let mut provider = match &args.complex_table {
        Some(p) => complex_gw::load_complex_table(p, &config.model)?,
        None => ComplexProvider::default_for(&config.model),
    };
    if args.kontsevich_fallback {
        provider = provider.into_composite();
    }
    if let Some(p) = args.cache.as_deref().filter(|p| p.exists()) {
        let text = std::fs::read_to_string(p).map_err(|e| Error::Io {
            path: p.display().to_string(),
            source: e,
        })?;
        let entries = complex_gw::parse_complex_table(&text, &p.display().to_string(), &config.model)?;
        provider.preload(&config.model, entries)?;
    }
    Ok((config, provider))
}

fn write_cache(args: &RunArgs, provider: &ComplexProvider) -> Result<(), Failure> {
    if let Some(p) = &args.cache {
        write_file(p, &provider.dump())?;
    }
    Ok(())
}

fn write_file(path: &Path, text: &str) -> Result<(), Error> {
    std::fs::write(path, text).map_err(|e| Error::Io {
        path: path.display().to_string(),
        source: e,
    })
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), Error> {
    match out {
        Some(p) => write_file(p, text),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes()).map_err(|e| Error::Io {
                path: "<stdout>".into(),
                source: e,
            })
        }
    }
}

fn to_json_line<T: serde::Serialize>(value: &T) -> Result<String, Error> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

fn compute(args: ComputeArgs) -> Result<u8, Failure> {
    let (config, provider) = prepare(&args.run)?;
    let horizon = config.options.horizon(config.degree_bound);
    let instances = relations::enumerate_instances(&config.model, horizon, &config.triples, &provider)?;
    write_cache(&args.run, &provider)?;
    if let Some(p) = &args.dump_instances {
        let doc: Vec<_> = instances.iter().map(|i| i.to_json()).collect();
        write_file(p, &to_json_line(&doc)?)?;
    }
    let (table, report) = solver::solve_instances(
        &config.model,
        &instances,
        config.degree_bound,
        &config.seeds,
        config.options,
    )?;
    emit(args.out.as_deref(), &table_io::render(&table, args.emit)?)?;
    if let Some(p) = &args.report {
        write_file(p, &to_json_line(&report)?)?;
    }
    eprintln!(
        "{}: {} invariants up to degree {}, {} instances, {} unresolved, {} unconstrained",
        config.model.kind(),
        table.len(),
        config.degree_bound,
        report.instances,
        report.unresolved.len(),
        report.unconstrained.len()
    );
    for k in &report.unresolved {
        eprintln!("unresolved: {k}");
    }
    Ok(if report.unresolved.is_empty() {
        0
    } else {
        EXIT_UNRESOLVED
    })
}

fn check(args: CheckArgs) -> Result<u8, Failure> {
    let (config, provider) = prepare(&args.run)?;
    let (_, report) = verify::run_checks(&config, &provider)?;
    write_cache(&args.run, &provider)?;
    let json = to_json_line(&report)?;
    if let Some(p) = &args.report {
        write_file(p, &json)?;
    }
    if args.json {
        emit(None, &json)?;
    } else {
        emit(None, &report.summary())?;
    }
    if report.ok() {
        Ok(0)
    } else if !report.solve.unresolved.is_empty() {
        Err(Failure::Code(EXIT_UNRESOLVED))
    } else {
        Err(Failure::Code(EXIT_CHECK_FAILED))
    }
}

fn export(args: ExportArgs) -> Result<u8, Failure> {
    let (mut table, format) = table_io::read_table(&args.input)?;
    if args.abs_only {
        table = table.abs();
    }
    let target = args.emit.unwrap_or(format.other());
    emit(args.out.as_deref(), &table_io::render(&table, target)?)?;
    Ok(0)
}
