//! Batch Lempert verification over `(a, b)` grids.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::time::Instant;
use thiserror::Error;

use crate::metrics::lempert_verify_with;
use crate::tol::Tolerances;
use crate::varieties::DomainDab;

#[derive(Debug, Error)]
pub enum SweepError {
    #[error("grid cell (a={a}, b={b}) is outside the interesting regime; allow degenerate cells to include it")]
    Degenerate { a: f64, b: f64 },
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub a_min: f64,
    pub a_max: f64,
    pub a_steps: usize,
    pub b_min: f64,
    pub b_max: f64,
    pub b_steps: usize,
    pub samples: u64,
    pub seed: u64,
    pub allow_degenerate: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CellStatus {
    Ok,
    Failed,
    RetractRegime,
}

impl CellStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            CellStatus::Ok => "ok",
            CellStatus::Failed => "failed",
            CellStatus::RetractRegime => "retract-regime",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub a: f64,
    pub b: f64,
    pub status: CellStatus,
    pub samples: u64,
    pub passes: u64,
    pub failures: u64,
    pub worst_gap: f64,
    pub worst_residual: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub elapsed_ms: Option<f64>,
}

/// `steps` equally spaced values from `min` to `max` inclusive.
pub fn grid_values(min: f64, max: f64, steps: usize) -> Vec<f64> {
    match steps {
        0 => vec![],
        1 => vec![min],
        n => (0..n)
            .map(|k| {
                let t = k as f64 / (n - 1) as f64;
                // exact at both ends
                (1.0 - t) * min + t * max
            })
            .collect(),
    }
}

fn validate(spec: &SweepSpec) -> Result<Vec<(f64, f64)>, SweepError> {
    let ok = |lo: f64, hi: f64| lo.is_finite() && hi.is_finite() && lo > 0.0 && hi >= lo;
    if !ok(spec.a_min, spec.a_max) || !ok(spec.b_min, spec.b_max) {
        return Err(SweepError::InvalidGrid("bounds must be positive with min <= max".into()));
    }
    if spec.a_steps == 0 || spec.b_steps == 0 {
        return Err(SweepError::InvalidGrid("step counts must be positive".into()));
    }
    let mut cells = vec![];
    for a in grid_values(spec.a_min, spec.a_max, spec.a_steps) {
        for b in grid_values(spec.b_min, spec.b_max, spec.b_steps) {
            let d = DomainDab { a, b };
            if !d.is_interesting() && !spec.allow_degenerate {
                return Err(SweepError::Degenerate { a, b });
            }
            cells.push((a, b));
        }
    }
    Ok(cells)
}

/// One row per grid cell, `a` major. With `timing` each row records its
/// wall-clock time, which makes the output non-reproducible.
pub fn sweep(spec: &SweepSpec, timing: bool) -> Result<Vec<SweepRow>, SweepError> {
    sweep_with(spec, timing, &Tolerances::default())
}

pub fn sweep_with(spec: &SweepSpec, timing: bool, tols: &Tolerances) -> Result<Vec<SweepRow>, SweepError> {
    let cells = validate(spec)?;
    Ok(cells
        .into_par_iter()
        .map(|(a, b)| {
            let start = Instant::now();
            let d = DomainDab { a, b };
            let mut row = SweepRow {
                a,
                b,
                status: CellStatus::RetractRegime,
                samples: spec.samples,
                passes: 0,
                failures: 0,
                worst_gap: 0.0,
                worst_residual: 0.0,
                elapsed_ms: None,
            };
            if let Ok(r) = lempert_verify_with(&d, spec.samples, spec.seed, tols) {
                row.status = if r.failures == 0 { CellStatus::Ok } else { CellStatus::Failed };
                row.passes = r.passes;
                row.failures = r.failures;
                row.worst_gap = r.worst_gap;
                row.worst_residual = r.worst_residual;
            }
            if timing {
                row.elapsed_ms = Some(start.elapsed().as_secs_f64() * 1e3);
            }
            row
        })
        .collect())
}

pub fn any_failed(rows: &[SweepRow]) -> bool {
    rows.iter().any(|r| r.status == CellStatus::Failed)
}

/// CSV with a header row; the timing column appears only when present.
pub fn write_csv<W: Write>(rows: &[SweepRow], out: W) -> Result<(), SweepError> {
    let timing = rows.iter().any(|r| r.elapsed_ms.is_some());
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["a", "b", "status", "samples", "passes", "failures", "worst_gap", "worst_residual"];
    if timing {
        header.push("elapsed_ms");
    }
    w.write_record(&header)?;
    for r in rows {
        let mut rec = vec![
            format!("{:?}", r.a),
            format!("{:?}", r.b),
            r.status.as_str().to_string(),
            r.samples.to_string(),
            r.passes.to_string(),
            r.failures.to_string(),
            format!("{:?}", r.worst_gap),
            format!("{:?}", r.worst_residual),
        ];
        if timing {
            rec.push(r.elapsed_ms.map(|t| format!("{t:.3}")).unwrap_or_default());
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}
