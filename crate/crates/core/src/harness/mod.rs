//! Experiment configs, file outputs, replay and the complexity benchmark.

mod bench;
mod experiment;
mod output;
mod resample;

pub use bench::{benchmark_complexity, complexity_slope, predicted_pmkv_evals, write_bench_csv, BenchOptions, BenchRow, SlopeFit};
pub use experiment::{
    exit_code, run_experiment, DiagnosticsConfig, Experiment, ExperimentConfig, ExperimentResult, ExperimentSummary,
    FunctionalConfig, LoadedConfig, OracleSummary, Overrides, PlannerConfig, RunMethod, SUMMARY_SCHEMA_VERSION,
};
pub use output::{
    format_float, load_cloud_csv, read_cloud_csv, save_cloud_csv, write_cloud_csv, write_trace_csv, CSV_SCHEMA,
};
pub use resample::resample;
