//! `vpsa` — run virtual particle experiments from JSON configs.
//!
//! Exit codes: 0 success, 1 failed assumption check, 2 configuration error,
//! 3 divergence, 4 I/O error.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use vpsa_core::harness::{
    benchmark_complexity, complexity_slope, exit_code, resample, run_experiment, write_bench_csv, BenchOptions,
    LoadedConfig, Overrides,
};
use vpsa_core::{check_assumptions, Error, Result};

#[derive(Parser)]
#[command(name = "vpsa", version, about = "Virtual particle mean-field Langevin sampler")]
struct Cli {
    /// Suppress the JSON report on stdout.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Experiment config (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides the config's `out_dir`.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Master seed; overrides the config's `run.master_seed`.
    #[arg(long)]
    seed: Option<u64>,
}

impl Common {
    fn overrides(&self) -> Overrides {
        Overrides {
            out_dir: self.out_dir.clone(),
            seed: self.seed,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment and write trace, cloud, witness and summary files.
    Run(Common),
    /// Draw fresh samples from a stored witness path.
    Resample {
        #[command(flatten)]
        common: Common,
        /// Witness file; defaults to `<out_dir>/witness.bin`.
        #[arg(long)]
        witness: Option<PathBuf>,
        /// Number of samples.
        #[arg(long, short = 'n')]
        n_extra: usize,
        /// First noise stream index; defaults to the run's particle count,
        /// so the samples are fresh rather than copies of the original cloud.
        #[arg(long)]
        seed_offset: Option<u64>,
        /// Output CSV; defaults to `<out_dir>/resample.csv`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Measure estimator calls and wall time over a grid of (n, T).
    Bench {
        #[command(flatten)]
        common: Common,
        /// Comma-separated cells `n:T`.
        #[arg(long, default_value = "100:100,200:100,400:100,100:200,100:400,400:400")]
        grid: String,
        #[arg(long, default_value_t = 3)]
        repeats: usize,
        /// Also run the interacting-particle baseline.
        #[arg(long)]
        baseline: bool,
    },
    /// Check the functional's assumptions only.
    Check(Common),
    /// Print the step-size schedule only.
    Plan(Common),
}

fn parse_grid(s: &str) -> Result<Vec<(usize, usize)>> {
    s.split(',')
        .map(|cell| {
            let (n, t) = cell
                .trim()
                .split_once(':')
                .ok_or_else(|| Error::Config(format!("grid cell {cell:?} is not n:T")))?;
            let parse = |v: &str| {
                v.trim()
                    .parse::<usize>()
                    .map_err(|e| Error::Config(format!("grid cell {cell:?}: {e}")))
            };
            Ok((parse(n)?, parse(t)?))
        })
        .collect()
}

fn emit<T: Serialize>(quiet: bool, value: &T) -> Result<()> {
    if !quiet {
        let mut out = io::stdout().lock();
        serde_json::to_writer_pretty(&mut out, value)?;
        writeln!(out)?;
    }
    Ok(())
}

fn execute(cli: &Cli) -> Result<ExitCode> {
    match &cli.command {
        Command::Run(common) => {
            let summary = run_experiment(&common.config, &common.overrides())?;
            emit(cli.quiet, &summary)?;
        }
        Command::Resample {
            common,
            witness,
            n_extra,
            seed_offset,
            out,
        } => {
            let loaded = LoadedConfig::from_path(&common.config)?.with_overrides(&common.overrides());
            let dir = loaded.out_dir();
            let offset = seed_offset.unwrap_or(loaded.config.run.particles as u64);
            let witness = witness.clone().unwrap_or_else(|| dir.join("witness.bin"));
            let out = out.clone().unwrap_or_else(|| dir.join("resample.csv"));
            let cloud = resample(&common.config, &common.overrides(), &witness, *n_extra, offset, &out)?;
            emit(
                cli.quiet,
                &serde_json::json!({
                    "samples": cloud.len(),
                    "seed_offset": offset,
                    "out": out.display().to_string(),
                }),
            )?;
        }
        Command::Bench {
            common,
            grid,
            repeats,
            baseline,
        } => {
            let loaded = LoadedConfig::from_path(&common.config)?.with_overrides(&common.overrides());
            let experiment = loaded.resolve()?;
            let options = BenchOptions {
                repeats: *repeats,
                baseline: *baseline,
            };
            let rows = benchmark_complexity(&parse_grid(grid)?, &experiment.functional, &experiment.run, &options)?;
            std::fs::create_dir_all(&experiment.out_dir)?;
            let path = experiment.out_dir.join("bench.csv");
            write_bench_csv(BufWriter::new(File::create(&path)?), &rows, &experiment.run, &experiment.functional)?;
            let fit = complexity_slope(&rows, 0.15).ok();
            let exact = rows.iter().all(|r| r.measured_evals == r.predicted_evals);
            emit(
                cli.quiet,
                &serde_json::json!({
                    "rows": rows,
                    "counts_exact": exact,
                    "slope": fit,
                    "out": path.display().to_string(),
                }),
            )?;
        }
        Command::Check(common) => {
            let experiment = LoadedConfig::from_path(&common.config)?
                .with_overrides(&common.overrides())
                .resolve()?;
            let report = check_assumptions(&experiment.functional, experiment.c_lsi());
            emit(cli.quiet, &report)?;
            if !report.passed {
                return Ok(ExitCode::from(1));
            }
        }
        Command::Plan(common) => {
            let experiment = LoadedConfig::from_path(&common.config)?
                .with_overrides(&common.overrides())
                .resolve()?;
            let plan = experiment
                .plan
                .ok_or_else(|| Error::Config("config has no planner section".into()))?;
            emit(cli.quiet, &plan)?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code(&err) as u8)
        }
    }
}
