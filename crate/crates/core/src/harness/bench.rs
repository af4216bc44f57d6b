//! Measured cost of the virtual particle scheme against `B·n·T + B²·T(T+1)/2`.

use std::io::Write;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::output::format_float;
use crate::config::{config_hash, RunConfig};
use crate::dynamics::{eval_count, pmkv_eval_count, pmkv_run, vpsa_run};
use crate::error::{Error, Result};
use crate::functional::FunctionalSpec;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub n: usize,
    pub steps: usize,
    pub predicted_evals: u64,
    pub measured_evals: u64,
    /// Fastest of the repetitions.
    pub wall_secs: f64,
    /// Kernel evaluations of the interacting-particle baseline, when run.
    pub pmkv_evals: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchOptions {
    pub repeats: usize,
    pub baseline: bool,
}

impl Default for BenchOptions {
    fn default() -> Self {
        Self {
            repeats: 3,
            baseline: false,
        }
    }
}

/// Runs every `(n, T)` cell with the parameters of `base`. Rows come back
/// sorted by `(n, T)`.
pub fn benchmark_complexity(
    grid: &[(usize, usize)],
    functional: &FunctionalSpec,
    base: &RunConfig,
    options: &BenchOptions,
) -> Result<Vec<BenchRow>> {
    if grid.is_empty() {
        return Err(Error::Config("benchmark grid is empty".into()));
    }
    let mut cells = grid.to_vec();
    cells.sort_unstable();
    cells.dedup();
    let mut rows = Vec::with_capacity(cells.len());
    for (n, steps) in cells {
        let config = RunConfig {
            particles: n,
            steps,
            trace_every: 0,
            trace_energy: false,
            ..base.clone()
        };
        let mut wall = f64::INFINITY;
        let mut measured = 0;
        for _ in 0..options.repeats.max(1) {
            let start = Instant::now();
            let out = vpsa_run(&config, functional)?;
            wall = wall.min(start.elapsed().as_secs_f64());
            measured = out.trace.total_evals;
        }
        let pmkv_evals = if options.baseline && n > 0 {
            Some(pmkv_run(&config, functional)?.trace.total_evals)
        } else {
            None
        };
        rows.push(BenchRow {
            n,
            steps,
            predicted_evals: eval_count(n as u64, steps as u64, config.batch_size as u64),
            measured_evals: measured,
            wall_secs: wall,
            pmkv_evals,
        });
    }
    Ok(rows)
}

/// Predicted baseline cost for comparison columns.
pub fn predicted_pmkv_evals(functional: &FunctionalSpec, n: usize, steps: usize) -> u64 {
    pmkv_eval_count(functional, n as u64, steps as u64)
}

pub fn write_bench_csv<W: Write>(
    mut w: W,
    rows: &[BenchRow],
    base: &RunConfig,
    functional: &FunctionalSpec,
) -> Result<()> {
    let hash = hex::encode(config_hash(base, functional));
    writeln!(w, "# schema=v1 config_hash={hash}")?;
    let mut csv = csv::Writer::from_writer(w);
    csv.write_record(["n", "T", "predicted_evals", "measured_evals", "wall_time", "pmkv_evals"])?;
    for r in rows {
        csv.write_record([
            r.n.to_string(),
            r.steps.to_string(),
            r.predicted_evals.to_string(),
            r.measured_evals.to_string(),
            format_float(r.wall_secs),
            r.pmkv_evals.map(|v| v.to_string()).unwrap_or_default(),
        ])?;
    }
    csv.flush()?;
    Ok(())
}

/// Least-squares fit of `log(wall) = a + slope·log(predicted_evals)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub tolerance: f64,
    /// `|slope − 1| ≤ tolerance`.
    pub passed: bool,
}

pub fn complexity_slope(rows: &[BenchRow], tolerance: f64) -> Result<SlopeFit> {
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.predicted_evals > 0 && r.wall_secs > 0.0)
        .map(|r| ((r.predicted_evals as f64).ln(), r.wall_secs.ln()))
        .collect();
    if pts.len() < 2 {
        return Err(Error::Config("slope fit needs at least two non-empty cells".into()));
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Config("slope fit needs cells of different cost".into()));
    }
    let slope = sxy / sxx;
    let r_squared = if syy > 0.0 { sxy * sxy / (sxx * syy) } else { 1.0 };
    Ok(SlopeFit {
        slope,
        intercept: my - slope * mx,
        r_squared,
        tolerance,
        passed: (slope - 1.0).abs() <= tolerance,
    })
}
