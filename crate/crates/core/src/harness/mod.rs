//! Experiment runner: specs, replicate fan-out, sweeps and output files.

mod pipelines;
pub mod spec;
pub mod table;

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde_json::json;
use thiserror::Error;

use crate::rng::replicate_seed;

pub use pipelines::columns;
pub use spec::{help_text, parse_config, ExperimentSpec, Kind, ParamType, Value};
pub use table::{Cell, Table};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("config line {line}: {message}")]
    Config { line: usize, message: String },
    #[error(transparent)]
    Run(#[from] crate::Error),
    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },
}

impl HarnessError {
    /// 2 for usage, config and parameter errors, 3 for failures while running.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Usage(_) | HarnessError::Config { .. } => 2,
            HarnessError::Run(crate::Error::InvalidParameter { .. } | crate::Error::InvalidLaw { .. }) => 2,
            HarnessError::Run(_) | HarnessError::Io { .. } => 3,
        }
    }
}

pub struct RunOutput {
    pub table: Table,
    pub summary: serde_json::Value,
}

fn run_single(spec: &ExperimentSpec) -> Result<Table, HarnessError> {
    let kind = spec.pipeline_kind();
    let rows = (0..spec.replicates)
        .into_par_iter()
        .map(|i| {
            let rep = pipelines::Replicate {
                index: i,
                seed: replicate_seed(spec.master_seed, i as u64),
            };
            pipelines::run_replicate(spec, &rep)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Table::with_aggregates(columns(kind), rows))
}

/// Every combination of the sweep axes, first axis slowest.
fn grid_points(grid: &[(String, Vec<Value>)]) -> Vec<Vec<Value>> {
    grid.iter().fold(vec![Vec::new()], |acc, (_, values)| {
        acc.into_iter()
            .flat_map(|prefix| {
                values.iter().map(move |v| {
                    let mut p = prefix.clone();
                    p.push(v.clone());
                    p
                })
            })
            .collect()
    })
}

/// Run every grid point with the same master seed and concatenate the tables;
/// axis values lead each row under `vary.<key>` columns.
pub fn sweep(spec: &ExperimentSpec) -> Result<Table, HarnessError> {
    if spec.grid.is_empty() {
        return Err(HarnessError::Usage("sweep needs at least one --vary.<key> axis".into()));
    }
    let names: Vec<String> = spec.grid.iter().map(|(k, _)| k.clone()).collect();
    let headers: Vec<String> = names.iter().map(|k| format!("vary.{k}")).collect();
    let mut out: Option<Table> = None;
    for point in grid_points(&spec.grid) {
        let mut sub = spec.clone();
        sub.grid.clear();
        for (k, v) in names.iter().zip(&point) {
            sub.params.insert(k.clone(), v.clone());
        }
        let cells: Vec<Cell> = point.iter().map(|v| Cell::Text(v.to_string())).collect();
        let t = run_single(&sub)?.prefixed(&headers, &cells);
        match &mut out {
            None => out = Some(t),
            Some(acc) => acc.rows.extend(t.rows),
        }
    }
    Ok(out.expect("grid is non-empty"))
}

/// Execute a spec on a pool of `spec.threads` workers (all cores by default).
pub fn run(spec: &ExperimentSpec) -> Result<RunOutput, HarnessError> {
    if spec.replicates == 0 {
        return Err(HarnessError::Usage("reps must be at least 1".into()));
    }
    let start = Instant::now();
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(t) = spec.threads {
        pool = pool.num_threads(t);
    }
    let pool = pool.build().map_err(|e| HarnessError::Usage(format!("thread pool: {e}")))?;
    let table = pool.install(|| {
        if spec.kind == Kind::Sweep {
            sweep(spec)
        } else {
            run_single(spec)
        }
    })?;
    let params: serde_json::Map<String, serde_json::Value> =
        spec.params.iter().map(|(k, v)| (k.clone(), json!(v.to_string()))).collect();
    let grid: serde_json::Map<String, serde_json::Value> = spec
        .grid
        .iter()
        .map(|(k, vs)| (k.clone(), json!(vs.iter().map(|v| v.to_string()).collect::<Vec<_>>())))
        .collect();
    let summary = json!({
        "kind": spec.kind.name(),
        "of": spec.of.map(|k| k.name()),
        "params": params,
        "grid": grid,
        "master_seed": spec.master_seed,
        "replicates": spec.replicates,
        "version": env!("CARGO_PKG_VERSION"),
        "wall_time_s": start.elapsed().as_secs_f64(),
        "columns": table.columns,
        "aggregates": table.aggregates_json(),
    });
    Ok(RunOutput { table, summary })
}

/// `<out>` with a `.json` extension.
pub fn summary_path(out: &Path) -> PathBuf {
    out.with_extension("json")
}

/// Write the CSV to `out` and the JSON summary next to it.
pub fn write_outputs(output: &RunOutput, out: &Path) -> Result<(), HarnessError> {
    let io = |path: &Path, e: &dyn std::fmt::Display| HarnessError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    };
    let f = File::create(out).map_err(|e| io(out, &e))?;
    output.table.write_csv(BufWriter::new(f)).map_err(|e| io(out, &e))?;
    let js = summary_path(out);
    let f = File::create(&js).map_err(|e| io(&js, &e))?;
    serde_json::to_writer_pretty(BufWriter::new(f), &output.summary).map_err(|e| io(&js, &e))?;
    Ok(())
}
