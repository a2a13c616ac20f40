//! Trace CSV with the fixed column set
//! `k, lyapunov, err_norm, residual, inner_iters, inner_residual`.

use std::io::Write;

use serde::{Deserialize, Serialize};

use monosplit::{ConvergenceTrace, TraceEntry};

use crate::error::Result;

#[derive(Debug, PartialEq, Serialize, Deserialize)]
struct Row {
    k: usize,
    lyapunov: f64,
    err_norm: Option<f64>,
    residual: f64,
    inner_iters: Option<usize>,
    inner_residual: Option<f64>,
}

pub fn write_trace<W: Write>(trace: &ConvergenceTrace, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for e in &trace.entries {
        out.serialize(Row {
            k: e.k,
            lyapunov: e.lyapunov,
            err_norm: e.err_norm,
            residual: e.residual,
            inner_iters: e.inner_iters,
            inner_residual: e.inner_residual,
        })?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_trace<R: std::io::Read>(r: R) -> Result<Vec<TraceEntry>> {
    let mut rd = csv::Reader::from_reader(r);
    let mut out = Vec::new();
    for row in rd.deserialize() {
        let row: Row = row?;
        out.push(TraceEntry {
            k: row.k,
            lyapunov: row.lyapunov,
            err_norm: row.err_norm,
            residual: row.residual,
            inner_iters: row.inner_iters,
            inner_residual: row.inner_residual,
        });
    }
    Ok(out)
}
