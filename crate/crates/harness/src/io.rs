//! Result files: `trace_<seed>.jsonl`, `summary.json` and `summary.csv`.

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use sosp_core::IterationRecord;

use crate::experiment::EnsembleOutput;
use crate::summary::{EnsembleSummary, SeedRow};
use crate::HarnessError;

pub fn trace_path(dir: &Path, seed_index: u64) -> PathBuf {
    dir.join(format!("trace_{seed_index}.jsonl"))
}

/// One JSON object per line.
pub fn write_trace(path: &Path, trace: &[IterationRecord]) -> Result<(), HarnessError> {
    let file = File::create(path).map_err(|e| HarnessError::io(path, e))?;
    let mut w = BufWriter::new(file);
    for rec in trace {
        serde_json::to_writer(&mut w, rec).map_err(|e| HarnessError::format(path, e))?;
        w.write_all(b"\n").map_err(|e| HarnessError::io(path, e))?;
    }
    w.flush().map_err(|e| HarnessError::io(path, e))
}

pub fn read_trace(path: &Path) -> Result<Vec<IterationRecord>, HarnessError> {
    let file = File::open(path).map_err(|e| HarnessError::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| HarnessError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec = serde_json::from_str(&line).map_err(|e| HarnessError::format(path, format!("line {}: {e}", i + 1)))?;
        out.push(rec);
    }
    Ok(out)
}

pub fn write_summary_json(path: &Path, summary: &EnsembleSummary) -> Result<(), HarnessError> {
    let text = serde_json::to_string_pretty(summary).map_err(|e| HarnessError::format(path, e))?;
    fs::write(path, text + "\n").map_err(|e| HarnessError::io(path, e))
}

pub fn read_summary_json(path: &Path) -> Result<EnsembleSummary, HarnessError> {
    let text = fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| HarnessError::format(path, e))
}

pub fn write_summary_csv(path: &Path, rows: &[SeedRow]) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| HarnessError::format(path, e))?;
    for r in rows {
        w.serialize(r).map_err(|e| HarnessError::format(path, e))?;
    }
    w.flush().map_err(|e| HarnessError::io(path, e))
}

pub fn read_summary_csv(path: &Path) -> Result<Vec<SeedRow>, HarnessError> {
    let mut r = csv::Reader::from_path(path).map_err(|e| HarnessError::format(path, e))?;
    r.deserialize().map(|row| row.map_err(|e| HarnessError::format(path, e))).collect()
}

/// Writes the summary files and, if enabled, one trace per seed.
pub fn write_outputs(dir: &Path, output: &EnsembleOutput, traces: bool) -> Result<(), HarnessError> {
    fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    if traces {
        for (row, trace) in output.summary.rows.iter().zip(&output.traces) {
            write_trace(&trace_path(dir, row.seed_index), trace)?;
        }
    }
    write_summary_json(&dir.join("summary.json"), &output.summary)?;
    write_summary_csv(&dir.join("summary.csv"), &output.summary.rows)
}
