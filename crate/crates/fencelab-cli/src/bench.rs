//! The `bench` subcommand: run a method x partition-count matrix over one
//! base configuration and tabulate iterations, wall time and final
//! diagnostics. Entries run sequentially so the wall times are comparable.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::time::Instant;

use anyhow::{Context, Result};

use fencelab::shapes::rasterize;
use fencelab::solver::{solve, Method};

use crate::config::RunConfig;
use crate::run::reported_iso_ratio;

#[derive(Debug, Clone)]
pub struct BenchRow {
    pub method: String,
    pub n_partitions: usize,
    pub iterations: usize,
    pub wall_seconds: f64,
    pub final_e_tilde: f64,
    pub iso_ratio: f64,
}

/// Runs every (method, partition count) combination of the matrix.
pub fn run_matrix(
    base: &RunConfig,
    methods: &[Method],
    partition_counts: &[usize],
) -> Result<Vec<BenchRow>> {
    let u0 = rasterize(&base.shape, base.grid)?;
    let mut rows = Vec::new();
    for &method in methods {
        for &n in partition_counts {
            let mut cfg = base.solver.clone();
            cfg.method = method;
            cfg.c = vec![1.0 / n as f64; n];
            // Make the proportions sum to one exactly.
            let tail: f64 = cfg.c.iter().skip(1).sum();
            cfg.c[0] = 1.0 - tail;
            let t0 = Instant::now();
            let result = solve(&u0, &cfg)?;
            let wall_seconds = t0.elapsed().as_secs_f64();
            let last = result.trace.last().context("empty trace")?;
            rows.push(BenchRow {
                method: method.name().to_string(),
                n_partitions: n,
                iterations: result.iterations(),
                wall_seconds,
                final_e_tilde: last.e_tilde,
                iso_ratio: reported_iso_ratio(&result, cfg.tau)?,
            });
        }
    }
    Ok(rows)
}

pub fn write_report(path: &Path, rows: &[BenchRow]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(
        w,
        "method,n_partitions,iterations,wall_seconds,final_e_tilde,iso_ratio"
    )?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{:.3},{:.11e},{:.11e}",
            r.method, r.n_partitions, r.iterations, r.wall_seconds, r.final_e_tilde, r.iso_ratio
        )?;
    }
    w.flush()?;
    Ok(())
}
