//! On-disk formats.
//!
//! * instances: JSON object with `phi` (row-major nested arrays), `b`,
//!   `x_star`, `sigma`, `eta` and `seed`; absent optional fields are `null`.
//! * recovery sweeps: CSV `algorithm,s,trials,recovered,rate`, one row per
//!   (algorithm, s).
//! * improvement runs: CSV `algo,seed,improvement_pct`, one row per trial and
//!   algorithm.
//! * outer traces: CSV `algo,seed,k,alpha,obj,l0,linf_err`; inner traces: CSV
//!   `k,inner_iters,objective,residual`. Missing values are empty fields.
//!
//! Floats are written in shortest round-trip form, so parsing a file gives
//! back the exact values.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use rwl1_core::linalg::Matrix;
use rwl1_core::model::ImprovementRecord;
use rwl1_core::reweight::RwTrace;
use rwl1_core::{ProblemInstance, SweepResult};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const SWEEP_HEADER: [&str; 5] = ["algorithm", "s", "trials", "recovered", "rate"];
pub const IMPROVEMENT_HEADER: [&str; 3] = ["algo", "seed", "improvement_pct"];
pub const TRACE_HEADER: [&str; 7] = ["algo", "seed", "k", "alpha", "obj", "l0", "linf_err"];
pub const INNER_TRACE_HEADER: [&str; 4] = ["k", "inner_iters", "objective", "residual"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceFile {
    pub phi: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    #[serde(default)]
    pub x_star: Option<Vec<f64>>,
    #[serde(default)]
    pub sigma: Option<f64>,
    #[serde(default)]
    pub eta: Option<f64>,
    #[serde(default)]
    pub seed: u64,
}

impl From<&ProblemInstance> for InstanceFile {
    fn from(inst: &ProblemInstance) -> Self {
        let phi = inst.phi();
        Self {
            phi: (0..phi.rows()).map(|i| phi.row(i).to_vec()).collect(),
            b: inst.b().to_vec(),
            x_star: inst.x_star().map(<[f64]>::to_vec),
            sigma: inst.sigma(),
            eta: inst.eta(),
            seed: inst.seed(),
        }
    }
}

impl TryFrom<InstanceFile> for ProblemInstance {
    type Error = rwl1_core::Error;

    fn try_from(f: InstanceFile) -> rwl1_core::Result<Self> {
        let phi = Matrix::from_rows(&f.phi)?;
        let mut inst = ProblemInstance::new(phi, f.b, f.seed)?;
        match (f.sigma, f.eta) {
            (sigma, Some(eta)) => inst = inst.with_noise(sigma, eta)?,
            (Some(sigma), None) => {
                let eta = rwl1_core::probgen::eta_from_sigma(sigma, inst.m());
                inst = inst.with_noise(Some(sigma), eta)?;
            }
            (None, None) => {}
        }
        match f.x_star {
            Some(x) => inst.with_ground_truth(x),
            None => Ok(inst),
        }
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|source| Error::Io { path: path.into(), source })
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io { path: path.into(), source }
}

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> Error + '_ {
    move |source| Error::Csv { path: path.into(), source }
}

pub fn write_instance(path: &Path, inst: &ProblemInstance) -> Result<()> {
    let mut out = create(path)?;
    serde_json::to_writer_pretty(&mut out, &InstanceFile::from(inst))
        .map_err(|source| Error::Json { path: path.into(), source })?;
    out.write_all(b"\n").and_then(|_| out.flush()).map_err(io_err(path))
}

pub fn read_instance(path: &Path) -> Result<ProblemInstance> {
    let file = File::open(path).map_err(io_err(path))?;
    let raw: InstanceFile =
        serde_json::from_reader(BufReader::new(file)).map_err(|source| Error::Json { path: path.into(), source })?;
    Ok(ProblemInstance::try_from(raw)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub algorithm: String,
    pub s: usize,
    pub trials: usize,
    pub recovered: usize,
    pub rate: f64,
}

/// One row per (algorithm, s), algorithms in label order.
pub fn sweep_rows(result: &SweepResult) -> Vec<SweepRow> {
    let mut rows = Vec::new();
    for (algorithm, counts) in &result.recovered {
        let rates = result.rates(algorithm).unwrap_or_default();
        for ((&s, &recovered), &rate) in result.sparsity_levels.iter().zip(counts).zip(&rates) {
            rows.push(SweepRow { algorithm: algorithm.clone(), s, trials: result.trials, recovered, rate });
        }
    }
    rows
}

fn write_rows<T: Serialize>(path: &Path, header: &[&str], rows: impl IntoIterator<Item = T>) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(create(path)?);
    w.write_record(header).map_err(csv_err(path))?;
    for row in rows {
        w.serialize(row).map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

fn read_rows<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err(path))?;
    r.deserialize().collect::<Result<Vec<T>, _>>().map_err(csv_err(path))
}

pub fn write_sweep_csv(path: &Path, result: &SweepResult) -> Result<()> {
    write_rows(path, &SWEEP_HEADER, sweep_rows(result))
}

pub fn read_sweep_csv(path: &Path) -> Result<Vec<SweepRow>> {
    read_rows(path)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImprovementRow {
    pub algo: String,
    pub seed: u64,
    pub improvement_pct: f64,
}

impl From<&ImprovementRecord> for ImprovementRow {
    fn from(r: &ImprovementRecord) -> Self {
        Self { algo: r.algorithm.clone(), seed: r.seed, improvement_pct: r.improvement_pct }
    }
}

pub fn write_improvement_csv(path: &Path, records: &[ImprovementRecord]) -> Result<()> {
    write_rows(path, &IMPROVEMENT_HEADER, records.iter().map(ImprovementRow::from))
}

pub fn read_improvement_csv(path: &Path) -> Result<Vec<ImprovementRow>> {
    read_rows(path)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub algo: String,
    pub seed: u64,
    pub k: usize,
    pub alpha: Option<f64>,
    pub obj: f64,
    pub l0: usize,
    pub linf_err: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InnerTraceRow {
    pub k: usize,
    pub inner_iters: usize,
    pub objective: f64,
    pub residual: f64,
}

pub fn trace_rows(algo: &str, seed: u64, trace: &RwTrace) -> Vec<TraceRow> {
    trace
        .records
        .iter()
        .map(|r| TraceRow {
            algo: algo.to_owned(),
            seed,
            k: r.k,
            alpha: r.alpha,
            obj: r.objective,
            l0: r.l0,
            linf_err: r.linf_err,
        })
        .collect()
}

pub fn inner_trace_rows(trace: &RwTrace) -> Vec<InnerTraceRow> {
    trace
        .records
        .iter()
        .map(|r| InnerTraceRow {
            k: r.k,
            inner_iters: r.inner_iters,
            objective: r.objective,
            residual: r.inner_residual,
        })
        .collect()
}

/// Path of the inner-solve trace next to an outer trace: `run.csv` gives
/// `run.inner.csv`.
pub fn inner_trace_path(outer: &Path) -> std::path::PathBuf {
    let stem = outer.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    outer.with_file_name(format!("{stem}.inner.csv"))
}

/// Writes the outer trace to `path` and the inner-solve trace to
/// [`inner_trace_path`]`(path)`.
pub fn write_traces(path: &Path, algo: &str, seed: u64, trace: &RwTrace) -> Result<()> {
    write_rows(path, &TRACE_HEADER, trace_rows(algo, seed, trace))?;
    write_rows(&inner_trace_path(path), &INNER_TRACE_HEADER, inner_trace_rows(trace))
}

pub fn read_trace_csv(path: &Path) -> Result<Vec<TraceRow>> {
    read_rows(path)
}

pub fn read_inner_trace_csv(path: &Path) -> Result<Vec<InnerTraceRow>> {
    read_rows(path)
}
