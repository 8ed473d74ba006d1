//! Parameter sweeps over log-spaced `(nu, rho0, u0, u1)` grids.
//!
//! Tuples run in parallel on a pool of `jobs` workers; each tuple runs its
//! own pipeline sequentially. Rows come back in grid order whatever the
//! completion order.

use std::io::Write;

use boundstab_core::evans::stability_index;
use boundstab_core::spectrum::{count_unstable, matrix_winding_oracle, SpectrumOptions};
use boundstab_core::steady::solve_steady;
use boundstab_core::{FlowParams, PressureLaw, Sequential, SteadyOptions, Verdict};
use rayon::prelude::*;
use rayon::ThreadPoolBuilder;

use crate::formats::{float, FormatError};
use crate::CliError;

/// `lo:hi` with `0 < lo <= hi`.
pub fn parse_range(key: &str, text: &str) -> Result<(f64, f64), CliError> {
    let bad = || CliError::Usage(format!("`{key}`: expected `lo:hi` with 0 < lo <= hi, got `{text}`"));
    let (a, b) = text.split_once(':').ok_or_else(bad)?;
    let lo: f64 = a.trim().parse().map_err(|_| bad())?;
    let hi: f64 = b.trim().parse().map_err(|_| bad())?;
    if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
        return Err(bad());
    }
    Ok((lo, hi))
}

/// `steps` log-spaced values from `lo` to `hi`, endpoints exact.
pub fn log_space(lo: f64, hi: f64, steps: usize) -> Vec<f64> {
    if steps <= 1 || lo == hi {
        return vec![lo];
    }
    let ratio = (hi / lo).ln();
    (0..steps)
        .map(|i| match i {
            0 => lo,
            _ if i == steps - 1 => hi,
            _ => lo * (ratio * i as f64 / (steps - 1) as f64).exp(),
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct SweepPlan {
    pub nu: (f64, f64),
    pub rho0: (f64, f64),
    pub u0: (f64, f64),
    pub u1: (f64, f64),
    pub steps: usize,
    pub law: PressureLaw,
    pub steady: SteadyOptions,
    pub spectrum: SpectrumOptions,
    /// Grid sizes for the matrix determinant oracle; empty skips it.
    pub oracle_cells: Vec<usize>,
}

impl SweepPlan {
    /// All tuples in `(nu, rho0, u0, u1)` lexicographic grid order.
    pub fn tuples(&self) -> Vec<FlowTuple> {
        let axis = |r: (f64, f64)| log_space(r.0, r.1, self.steps);
        let (nus, rhos, u0s, u1s) = (axis(self.nu), axis(self.rho0), axis(self.u0), axis(self.u1));
        let mut out = Vec::with_capacity(nus.len() * rhos.len() * u0s.len() * u1s.len());
        for &nu in &nus {
            for &rho0 in &rhos {
                for &u0 in &u0s {
                    for &u1 in &u1s {
                        out.push(FlowTuple { nu, rho0, u0, u1 });
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowTuple {
    pub nu: f64,
    pub rho0: f64,
    pub u0: f64,
    pub u1: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub tuple: FlowTuple,
    pub b: Option<f64>,
    pub cells: Option<usize>,
    pub index: Option<i8>,
    pub winding: Option<i64>,
    /// Verdict label, or `SteadyFailure` when no profile was found.
    pub verdict: String,
    /// Oracle winding per requested grid size; `None` if inconclusive.
    pub oracle: Vec<Option<i64>>,
    pub detail: String,
}

impl SweepRow {
    pub fn is_stable(&self) -> bool {
        self.verdict == Verdict::SpectrallyStable.label()
    }

    /// Evans winding and every oracle winding are equal.
    pub fn oracle_agrees(&self) -> bool {
        self.winding.is_some() && self.oracle.iter().all(|w| *w == self.winding)
    }
}

pub fn run_tuple(plan: &SweepPlan, t: FlowTuple) -> SweepRow {
    let mut row = SweepRow {
        tuple: t,
        b: None,
        cells: None,
        index: None,
        winding: None,
        verdict: "SteadyFailure".into(),
        oracle: vec![None; plan.oracle_cells.len()],
        detail: String::new(),
    };
    let profile =
        match FlowParams::new(t.nu, t.rho0, t.u0, t.u1).and_then(|p| solve_steady(&p, &plan.law, &plan.steady)) {
            Ok(p) => p,
            Err(e) => {
                row.detail = e.to_string();
                return row;
            }
        };
    row.b = Some(profile.b());
    row.cells = Some(profile.cells());
    let mut notes = Vec::new();
    match stability_index(&profile, &plan.spectrum.evans) {
        Ok(ix) => row.index = Some(ix.index),
        Err(e) => notes.push(format!("index: {e}")),
    }
    let report = match count_unstable(&profile, &plan.spectrum, &Sequential) {
        Ok(r) => r,
        Err(e) => {
            row.verdict = "Inconclusive".into();
            row.detail = e.to_string();
            return row;
        }
    };
    row.winding = report.winding;
    row.verdict = report.verdict.label().into();
    if let Verdict::Inconclusive(reason) = &report.verdict {
        notes.push(reason.to_string());
    }
    for (slot, &cells) in row.oracle.iter_mut().zip(&plan.oracle_cells) {
        match matrix_winding_oracle(&profile, &report.contour, cells, &plan.spectrum.winding, &Sequential) {
            Ok(r) => {
                *slot = r.winding;
                if let Verdict::Inconclusive(reason) = &r.verdict {
                    notes.push(format!("oracle {cells}: {reason}"));
                }
            }
            Err(e) => notes.push(format!("oracle {cells}: {e}")),
        }
    }
    row.detail = notes.join("; ");
    row
}

/// Runs every tuple of `plan` on `jobs` workers; `progress` is called once
/// per finished tuple (in completion order).
pub fn run_sweep(
    plan: &SweepPlan,
    jobs: usize,
    progress: &(dyn Fn(&SweepRow) + Sync),
) -> Result<Vec<SweepRow>, CliError> {
    let pool = ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| CliError::Failure(format!("cannot start worker pool: {e}")))?;
    let tuples = plan.tuples();
    Ok(pool.install(|| {
        tuples
            .par_iter()
            .map(|&t| {
                let row = run_tuple(plan, t);
                progress(&row);
                row
            })
            .collect()
    }))
}

pub fn sweep_columns(oracle_cells: &[usize]) -> Vec<String> {
    let mut cols: Vec<String> =
        ["nu", "rho0", "u0", "u1", "b", "cells", "index", "winding", "verdict"].iter().map(|s| s.to_string()).collect();
    cols.extend(oracle_cells.iter().map(|n| format!("oracle_{n}")));
    cols.push("detail".into());
    cols
}

pub fn write_sweep<W: Write>(w: W, oracle_cells: &[usize], rows: &[SweepRow]) -> Result<(), FormatError> {
    let opt = |v: Option<String>| v.unwrap_or_default();
    let mut out = csv::Writer::from_writer(w);
    out.write_record(sweep_columns(oracle_cells))?;
    for r in rows {
        let mut rec = vec![
            float(r.tuple.nu),
            float(r.tuple.rho0),
            float(r.tuple.u0),
            float(r.tuple.u1),
            opt(r.b.map(float)),
            opt(r.cells.map(|c| c.to_string())),
            opt(r.index.map(|i| i.to_string())),
            opt(r.winding.map(|w| w.to_string())),
            r.verdict.clone(),
        ];
        rec.extend(r.oracle.iter().map(|w| opt(w.map(|w| w.to_string()))));
        rec.push(r.detail.clone());
        out.write_record(rec)?;
    }
    out.flush()?;
    Ok(())
}
