use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use cakecut::gen::{random_density_instance, random_grid_instance};
use cakecut::io::{ErrorReport, InstanceFile, SolverResult, ValuationSpec};
use cakecut::lift::solve3;
use cakecut::oracle::{brute_force_with_budget, DEFAULT_BUDGET};
use cakecut::query::TraceEntry;
use cakecut::solver::{solve2, solve4, solve4_rw, SolveReport};
use cakecut::{CakeError, Scalar, SharedValuation, Valuation};
use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

mod bench;
mod hard;

#[derive(Parser)]
#[command(name = "cakecut", version, about = "Connected envy-free cake cutting with exact arithmetic")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Two agents by bisection on the grid.
    Solve2(SolveArgs),
    /// Three agents through the four-agent solver on a lifted instance.
    Solve3(SolveArgs),
    /// Four monotone agents with value queries.
    Solve4(SolveArgs),
    /// Four additive agents with value and cut queries.
    Solve4Rw(SolveArgs),
    /// Exhaustive grid search for the least-envy allocation.
    Oracle(OracleArgs),
    /// Write a hard instance for a path with optional decorations.
    GenHard(hard::GenArgs),
    /// Check promises, square categories, envy-free divisions and claims of a hard instance.
    VerifyHard(hard::VerifyArgs),
    /// Sweep epsilon and report query counts as CSV.
    Bench(bench::BenchArgs),
}

#[derive(Args)]
pub struct Common {
    /// Target envy as `p/q`.
    #[arg(long, default_value = "1/64")]
    epsilon: Scalar,
    /// Seed for generated instances when `--in` is absent.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Instance JSON.
    #[arg(long = "in")]
    input: Option<PathBuf>,
    /// Output path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    common: Common,
    /// Write every query as a JSON line to this path.
    #[arg(long)]
    trace_queries: Option<PathBuf>,
}

#[derive(Args)]
struct OracleArgs {
    #[command(flatten)]
    common: Common,
    /// Grid step as `p/q`.
    #[arg(long, default_value = "1/64")]
    step: Scalar,
    /// Agents of a generated instance.
    #[arg(long, default_value_t = 4)]
    agents: usize,
    #[arg(long, default_value_t = DEFAULT_BUDGET)]
    budget_divisions: u64,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Kind {
    Solve2,
    Solve3,
    Solve4,
    Rw,
}

#[derive(Debug)]
pub enum CliError {
    Cake(CakeError),
    Io(String),
    /// Checks ran but some failed; the report was already written.
    Failed,
}

impl From<CakeError> for CliError {
    fn from(e: CakeError) -> Self {
        CliError::Cake(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;

pub fn read_text(path: &PathBuf) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn read_instance(path: &PathBuf) -> CliResult<InstanceFile> {
    Ok(InstanceFile::parse(&read_text(path)?)?)
}

pub fn write_out(out: &Option<PathBuf>, text: &str) -> CliResult<()> {
    match out {
        Some(p) => fs::write(p, text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

pub fn write_json<T: Serialize>(out: &Option<PathBuf>, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).expect("serializable");
    text.push('\n');
    write_out(out, &text)
}

fn write_trace(path: &PathBuf, trace: &[TraceEntry]) -> CliResult<()> {
    let mut w = std::io::BufWriter::new(fs::File::create(path)?);
    for e in trace {
        serde_json::to_writer(&mut w, e).expect("serializable");
        writeln!(w)?;
    }
    Ok(())
}

fn generated(kind: Kind, agents: usize, seed: u64) -> CliResult<InstanceFile> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let specs = if kind == Kind::Rw {
        random_density_instance(&mut rng, agents, 8)?.iter().map(ValuationSpec::density).collect()
    } else {
        random_grid_instance(&mut rng, agents, 64)?.iter().map(ValuationSpec::grid).collect()
    };
    Ok(InstanceFile { agents: specs, seed: Some(seed) })
}

fn load(common: &Common, kind: Kind, agents: usize) -> CliResult<InstanceFile> {
    match &common.input {
        Some(p) => read_instance(p),
        None => generated(kind, agents, common.seed),
    }
}

fn solve(kind: Kind, args: &SolveArgs) -> CliResult<()> {
    let agents = match kind {
        Kind::Solve2 => 2,
        Kind::Solve3 => 3,
        _ => 4,
    };
    let inst = load(&args.common, kind, agents)?;
    let eps = &args.common.epsilon;
    let trace = args.trace_queries.is_some();
    let report: SolveReport;
    let mut result = match kind {
        Kind::Solve2 => {
            report = solve2(&inst.build()?, eps, trace)?;
            SolverResult::new(&report.allocation, &report.max_envy, Some(&report.queries))
        }
        Kind::Solve4 => {
            report = solve4(&inst.build()?, eps, trace)?;
            SolverResult::new(&report.allocation, &report.max_envy, Some(&report.queries))
        }
        Kind::Rw => {
            report = solve4_rw(&inst.build_densities()?, eps, trace)?;
            SolverResult::new(&report.allocation, &report.max_envy, Some(&report.queries))
        }
        Kind::Solve3 => {
            let r = solve3(&inst.build()?, eps, trace)?;
            let res = SolverResult::new(&r.allocation, &r.max_envy, Some(&r.lifted.queries));
            report = r.lifted;
            res
        }
    };
    result.seed = inst.seed;
    if let (Some(path), Some(t)) = (&args.trace_queries, &report.trace) {
        write_trace(path, t)?;
    }
    write_json(&args.common.out, &result)
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct OracleOutput {
    #[serde(flatten)]
    result: SolverResult,
    evaluations: u64,
}

fn oracle(args: &OracleArgs) -> CliResult<()> {
    let inst = load(&args.common, Kind::Solve4, args.agents)?;
    let vals: Vec<SharedValuation> = inst.build()?;
    let refs: Vec<&dyn Valuation> = vals.iter().map(|v| v.as_ref()).collect();
    let r = brute_force_with_budget(&refs, &args.step, args.budget_divisions)?;
    let mut result = SolverResult::new(&r.best, &r.best_envy, None);
    result.grid_step = Some(r.grid_step);
    result.seed = inst.seed;
    write_json(&args.common.out, &OracleOutput { result, evaluations: r.evaluations })
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Solve2(a) => solve(Kind::Solve2, &a),
        Command::Solve3(a) => solve(Kind::Solve3, &a),
        Command::Solve4(a) => solve(Kind::Solve4, &a),
        Command::Solve4Rw(a) => solve(Kind::Rw, &a),
        Command::Oracle(a) => oracle(&a),
        Command::GenHard(a) => hard::gen(&a),
        Command::VerifyHard(a) => hard::verify(&a),
        Command::Bench(a) => bench::run(&a),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Failed) => ExitCode::from(1),
        Err(e) => {
            let report = match &e {
                CliError::Cake(c) => ErrorReport::from(c),
                CliError::Io(m) => ErrorReport { error: "IoError", message: m.clone(), promise: None },
                CliError::Failed => unreachable!(),
            };
            eprintln!("{}", serde_json::to_string(&report).expect("serializable"));
            ExitCode::from(2)
        }
    }
}
