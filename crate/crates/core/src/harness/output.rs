//! CSV outputs. Every file starts with a `# schema=v1 config_hash=…` line and
//! floats are written with 17 significant digits so they read back exactly.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::cloud::{ParticleCloud, ParticleKind};
use crate::dynamics::DiagnosticsTrace;
use crate::error::{Error, Result};

pub const CSV_SCHEMA: &str = "v1";

/// Round-trip exact decimal form of a float.
pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

fn opt(v: Option<f64>) -> String {
    v.map(format_float).unwrap_or_default()
}

fn header_line(config_hash: &str, extra: &str) -> String {
    if extra.is_empty() {
        format!("# schema={CSV_SCHEMA} config_hash={config_hash}\n")
    } else {
        format!("# schema={CSV_SCHEMA} config_hash={config_hash} {extra}\n")
    }
}

pub fn write_cloud_csv<W: Write>(mut w: W, cloud: &ParticleCloud, config_hash: &str) -> Result<()> {
    w.write_all(header_line(config_hash, &format!("step={}", cloud.step_index)).as_bytes())?;
    let mut csv = csv::Writer::from_writer(w);
    csv.write_record((0..cloud.dim()).map(|c| format!("x{c}")))?;
    for p in cloud.iter() {
        csv.write_record(p.iter().map(|v| format_float(*v)))?;
    }
    csv.flush()?;
    Ok(())
}

pub fn save_cloud_csv(path: &Path, cloud: &ParticleCloud, config_hash: &str) -> Result<()> {
    write_cloud_csv(BufWriter::new(File::create(path)?), cloud, config_hash)
}

/// Reads a cloud CSV, returning the cloud and the config hash of its header.
pub fn read_cloud_csv<R: Read>(r: R) -> Result<(ParticleCloud, String)> {
    let mut reader = BufReader::new(r);
    let mut first = String::new();
    reader.read_line(&mut first)?;
    let hash = first
        .trim()
        .strip_prefix("# schema=v1 ")
        .and_then(|rest| rest.split_whitespace().find_map(|f| f.strip_prefix("config_hash=")))
        .ok_or_else(|| Error::Format("cloud CSV lacks a schema=v1 header".into()))?
        .to_string();
    let mut csv = csv::Reader::from_reader(reader);
    let dim = csv.headers()?.len();
    let mut positions = Vec::new();
    for record in csv.records() {
        for field in record?.iter() {
            positions.push(
                field
                    .parse::<f64>()
                    .map_err(|e| Error::Format(format!("bad number {field:?}: {e}")))?,
            );
        }
    }
    Ok((ParticleCloud::new(dim, positions, 0, ParticleKind::Real)?, hash))
}

pub fn load_cloud_csv(path: &Path) -> Result<(ParticleCloud, String)> {
    read_cloud_csv(File::open(path)?)
}

/// Per-step trace. Wall-clock times are left out so that reruns are
/// byte-identical; they appear in the summary instead.
pub fn write_trace_csv<W: Write>(
    mut w: W,
    trace: &DiagnosticsTrace,
    energy_labels: (&str, &str),
    config_hash: &str,
) -> Result<()> {
    let method = serde_json::to_value(trace.method)?;
    let method = method.as_str().unwrap_or_default();
    w.write_all(header_line(config_hash, &format!("method={method}")).as_bytes())?;
    let mut csv = csv::Writer::from_writer(w);
    csv.write_record([
        "step",
        "evals",
        "mean_norm",
        "cov_trace",
        energy_labels.0,
        energy_labels.1,
        "f_part",
        "oracle_kl",
        "oracle_w2",
    ])?;
    for r in &trace.records {
        let parts = r.energy.map(|e| e.parts());
        csv.write_record([
            r.step.to_string(),
            r.evals.to_string(),
            format_float(r.mean_norm),
            format_float(r.cov_trace),
            opt(parts.map(|p| p.0)),
            opt(parts.map(|p| p.1)),
            opt(r.energy.map(|e| e.f_part())),
            opt(r.oracle_kl),
            opt(r.oracle_w2),
        ])?;
    }
    csv.flush()?;
    Ok(())
}
