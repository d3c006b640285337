use std::fmt::Write as _;
use std::path::PathBuf;

use cakecut::bench::{fit_exponent, sweep};
use cakecut::Mode;
use clap::{Args, ValueEnum};

use crate::{write_out, CliResult};

#[derive(Clone, Copy, ValueEnum)]
pub enum BenchMode {
    Value,
    Rw,
}

#[derive(Args)]
pub struct BenchArgs {
    #[arg(long, value_enum, default_value = "value")]
    mode: BenchMode,
    /// First seed of the instance family.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Instances in the family.
    #[arg(long, default_value_t = 1)]
    count: u64,
    #[arg(long, default_value_t = 8)]
    min_bits: u32,
    #[arg(long, default_value_t = 20)]
    max_bits: u32,
    /// Fill the wallTime column (milliseconds); left empty otherwise so output is reproducible.
    #[arg(long)]
    timing: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

pub fn run(a: &BenchArgs) -> CliResult<()> {
    let mode = match a.mode {
        BenchMode::Value => Mode::ValueOnly,
        BenchMode::Rw => Mode::RobertsonWebb,
    };
    let seeds: Vec<u64> = (a.seed..a.seed + a.count).collect();
    let rows = sweep(mode, &seeds, a.min_bits..=a.max_bits)?;
    let mut csv = String::from("epsilon,valueQueries,cutQueries,wallTime\n");
    for r in &rows {
        let wall = if a.timing { format!("{:.3}", r.wall.as_secs_f64() * 1e3) } else { String::new() };
        let _ = writeln!(csv, "{},{},{},{wall}", r.epsilon, r.value_queries, r.cut_queries);
    }
    let points: Vec<(u32, u64)> = rows
        .iter()
        .map(|r| (r.bits, if matches!(mode, Mode::ValueOnly) { r.value_queries } else { r.total() }))
        .collect();
    if points.len() >= 2 {
        let _ = writeln!(csv, "# exponent {:.4}", fit_exponent(&points));
    }
    write_out(&a.out, &csv)
}
