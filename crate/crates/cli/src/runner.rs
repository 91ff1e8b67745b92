//! Sweep execution and output.

use std::collections::BTreeMap;
use std::fs;
use std::panic::{self, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::{Experiment, SweepConfig};
use crate::experiments::{output_columns, run_point, Cell};

#[derive(Debug, Clone, PartialEq)]
pub struct PointRecord {
    pub index: usize,
    pub inputs: BTreeMap<String, f64>,
    pub outputs: Option<Vec<Cell>>,
    pub error: Option<String>,
    /// `None` unless convergence was checked.
    pub converged: Option<bool>,
}

impl PointRecord {
    pub fn ok(&self) -> bool {
        self.error.is_none()
    }
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub experiment: Experiment,
    pub input_columns: Vec<String>,
    pub output_columns: Vec<String>,
    pub records: Vec<PointRecord>,
    pub config_hash: String,
    pub wall_time_s: f64,
    pub jobs: usize,
    pub verified: bool,
}

impl SweepResult {
    pub fn failed(&self) -> usize {
        self.records.iter().filter(|r| !r.ok()).count()
    }
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    experiment: &'a str,
    config_hash: &'a str,
    version: &'a str,
    wall_time_s: f64,
    points: usize,
    failed: usize,
    jobs: usize,
    convergence_checked: bool,
    /// Indices of points whose refined rerun differed beyond tolerance.
    unconverged: Vec<usize>,
    csv: String,
    config: &'a SweepConfig,
}

/// SHA-256 of the resolved configuration, excluding output path and job count.
pub fn config_hash(cfg: &SweepConfig) -> String {
    let canonical = SweepConfig { output: None, jobs: None, ..cfg.clone() };
    let bytes = serde_json::to_vec(&canonical).expect("config serializes");
    hex::encode(Sha256::digest(&bytes))
}

fn evaluate(cfg: &SweepConfig, inputs: &BTreeMap<String, f64>, numerics: &crate::config::Numerics) -> Result<Vec<Cell>, String> {
    match panic::catch_unwind(AssertUnwindSafe(|| run_point(cfg.experiment, inputs, numerics))) {
        Ok(Ok(v)) => Ok(v),
        Ok(Err(e)) => Err(format!("{e:#}")),
        Err(p) => Err(match p.downcast_ref::<&str>() {
            Some(s) => format!("panic: {s}"),
            None => match p.downcast_ref::<String>() {
                Some(s) => format!("panic: {s}"),
                None => "panic".into(),
            },
        }),
    }
}

fn agrees(a: f64, b: f64, tol: f64) -> bool {
    if a == b || (a.is_nan() && b.is_nan()) {
        return true;
    }
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

/// Runs every point on a pool of `jobs` workers. Rows come back in index order
/// whatever the pool size.
pub fn run_sweep(cfg: &SweepConfig, jobs: usize, verify_convergence: bool) -> Result<SweepResult> {
    let start = Instant::now();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .start_handler(|_| fluxcat::linalg::use_sequential_kernels())
        .build()
        .context("building worker pool")?;
    let points = cfg.points();
    let refined = cfg.numerics.refined(cfg.experiment);
    let tol = cfg.numerics.convergence_tol;
    let records: Vec<PointRecord> = pool.install(|| {
        points
            .into_par_iter()
            .enumerate()
            .map(|(index, inputs)| {
                log::debug!("point {index}: {inputs:?}");
                let res = evaluate(cfg, &inputs, &cfg.numerics);
                let converged = match (&res, verify_convergence) {
                    (Ok(v), true) => Some(match evaluate(cfg, &inputs, &refined) {
                        Ok(w) => agrees(v[0].as_f64(), w[0].as_f64(), tol),
                        Err(e) => {
                            log::warn!("point {index}: refined run failed: {e}");
                            false
                        }
                    }),
                    _ => None,
                };
                if let Err(e) = &res {
                    log::warn!("point {index} failed: {e}");
                }
                let (outputs, error) = match res {
                    Ok(v) => (Some(v), None),
                    Err(e) => (None, Some(e)),
                };
                PointRecord { index, inputs, outputs, error, converged }
            })
            .collect()
    });
    let input_columns = records.first().map(|r| r.inputs.keys().cloned().collect()).unwrap_or_default();
    Ok(SweepResult {
        experiment: cfg.experiment,
        input_columns,
        output_columns: output_columns(cfg.experiment, &cfg.numerics),
        records,
        config_hash: config_hash(cfg),
        wall_time_s: start.elapsed().as_secs_f64(),
        jobs,
        verified: verify_convergence,
    })
}

/// Writes the table: index, inputs, outputs, `converged`, `status`, `error_message`.
pub fn write_csv<W: std::io::Write>(res: &SweepResult, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let mut header = vec!["index".to_string()];
    header.extend(res.input_columns.iter().cloned());
    header.extend(res.output_columns.iter().cloned());
    header.extend(["converged", "status", "error_message"].map(String::from));
    out.write_record(&header)?;
    for r in &res.records {
        let mut row = vec![r.index.to_string()];
        row.extend(res.input_columns.iter().map(|c| r.inputs.get(c).map(|v| v.to_string()).unwrap_or_default()));
        match &r.outputs {
            Some(v) => row.extend(v.iter().map(Cell::to_string)),
            None => row.extend(res.output_columns.iter().map(|_| String::new())),
        }
        row.push(r.converged.map(|c| c.to_string()).unwrap_or_default());
        row.push(if r.ok() { "ok" } else { "failed" }.into());
        row.push(r.error.clone().unwrap_or_default());
        out.write_record(&row)?;
    }
    out.flush()?;
    Ok(())
}

/// `results.csv` -> `results.manifest.json`.
pub fn manifest_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("manifest.json")
}

/// Writes the CSV and its manifest; returns the manifest path.
pub fn write_outputs(res: &SweepResult, cfg: &SweepConfig, csv_path: &Path) -> Result<PathBuf> {
    if let Some(dir) = csv_path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let file = fs::File::create(csv_path).with_context(|| format!("creating {}", csv_path.display()))?;
    write_csv(res, std::io::BufWriter::new(file))?;
    let manifest = Manifest {
        experiment: res.experiment.name(),
        config_hash: &res.config_hash,
        version: env!("CARGO_PKG_VERSION"),
        wall_time_s: res.wall_time_s,
        points: res.records.len(),
        failed: res.failed(),
        jobs: res.jobs,
        convergence_checked: res.verified,
        unconverged: res.records.iter().filter(|r| r.converged == Some(false)).map(|r| r.index).collect(),
        csv: csv_path.file_name().map(|f| f.to_string_lossy().into_owned()).unwrap_or_default(),
        config: cfg,
    };
    let mpath = manifest_path(csv_path);
    fs::write(&mpath, serde_json::to_string_pretty(&manifest)?).with_context(|| format!("writing {}", mpath.display()))?;
    Ok(mpath)
}
