use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::Result;
use crate::estimator::{CltSample, DecompositionSample, LlnPoint};
use crate::integrator::ErrorEstimate;
use crate::oracle::BatchMeans;
use crate::stats::{KsResult, Moments, OrderFit};

use super::config::ExperimentConfig;

/// One pass/fail verdict; `value` must lie in `[lower, upper]` (either end
/// may be open).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub lower: Option<f64>,
    pub upper: Option<f64>,
    pub passed: bool,
}

impl Check {
    pub fn within(name: impl Into<String>, value: f64, lower: Option<f64>, upper: Option<f64>) -> Self {
        let passed = value.is_finite() && lower.is_none_or(|l| value >= l) && upper.is_none_or(|u| value <= u);
        Self { name: name.into(), value, lower, upper, passed }
    }

    /// Strict upper bound.
    pub fn below(name: impl Into<String>, value: f64, upper: f64) -> Self {
        Self { name: name.into(), value, lower: None, upper: Some(upper), passed: value < upper }
    }

    pub fn flag(name: impl Into<String>, passed: bool) -> Self {
        Self { name: name.into(), value: if passed { 1.0 } else { 0.0 }, lower: Some(1.0), upper: None, passed }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OrderPoint {
    /// `τ` for temporal studies, `N` for spatial ones.
    pub x: f64,
    pub error: ErrorEstimate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InvariantRecord {
    pub tau: f64,
    pub dim: usize,
    pub mode: usize,
    pub steps: u64,
    pub burn_in: u64,
    pub empirical_second_moment: f64,
    pub batch_means: BatchMeans,
    pub discrete_exact: f64,
    pub continuous_exact: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CltSummary {
    pub sample: CltSample,
    pub moments: Moments,
    pub variance_ratio: f64,
    pub ks: KsResult,
    pub ks_threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecompositionPoint {
    pub tau: f64,
    pub m: u64,
    pub dim: usize,
    pub martingale_sample_variance: f64,
    pub martingale_variance: f64,
    pub band: [f64; 2],
    pub remainder_std: f64,
    pub sample: DecompositionSample,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Payload {
    TemporalOrder { points: Vec<OrderPoint>, fit: Option<OrderFit> },
    SpatialOrder { points: Vec<OrderPoint>, fit: Option<OrderFit> },
    InvariantMeasure { record: InvariantRecord },
    Lln { points: Vec<LlnPoint>, inversions: usize },
    Clt { summary: Box<CltSummary> },
    Decomposition { points: Vec<DecompositionPoint> },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Provenance {
    pub master_seed: u64,
    pub workers: usize,
    pub wall_clock_seconds: f64,
    pub version: &'static str,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentResult {
    pub schema_version: u32,
    pub name: String,
    pub experiment: &'static str,
    pub config: ExperimentConfig,
    pub payload: Payload,
    pub checks: Vec<Check>,
    pub passed: bool,
    pub provenance: Provenance,
}

/// A numeric table with fixed columns, rendered as CSV and as a gnuplot
/// data file.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cell {
    Int(u64),
    Float(f64),
}

impl std::fmt::Display for Cell {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Cell::Int(n) => write!(f, "{n}"),
            // shortest representation that round-trips
            Cell::Float(x) => write!(f, "{x:e}"),
        }
    }
}

impl Payload {
    /// The CSV table. Columns per experiment:
    ///
    /// | experiment | columns |
    /// |---|---|
    /// | temporal_order | `tau,rms_error,stderr,n_replicas` |
    /// | spatial_order | `n,rms_error,stderr,n_replicas` |
    /// | invariant_measure | `tau,n,mode,steps,second_moment,batch_stderr,discrete_exact,continuous_exact` |
    /// | lln | `tau,m,n,mean_abs_error,stderr,n_replicas` |
    /// | clt | `replica,time_average,deviation` |
    /// | decomposition | `tau,replica,deviation,martingale,remainder` |
    pub fn table(&self) -> Table {
        use Cell::{Float, Int};
        match self {
            Payload::TemporalOrder { points, .. } => Table {
                columns: vec!["tau", "rms_error", "stderr", "n_replicas"],
                rows: points
                    .iter()
                    .map(|p| vec![Float(p.x), Float(p.error.rms), Float(p.error.stderr), Int(p.error.replicas as u64)])
                    .collect(),
            },
            Payload::SpatialOrder { points, .. } => Table {
                columns: vec!["n", "rms_error", "stderr", "n_replicas"],
                rows: points
                    .iter()
                    .map(|p| vec![Int(p.x as u64), Float(p.error.rms), Float(p.error.stderr), Int(p.error.replicas as u64)])
                    .collect(),
            },
            Payload::InvariantMeasure { record: r } => Table {
                columns: vec![
                    "tau",
                    "n",
                    "mode",
                    "steps",
                    "second_moment",
                    "batch_stderr",
                    "discrete_exact",
                    "continuous_exact",
                ],
                rows: vec![vec![
                    Float(r.tau),
                    Int(r.dim as u64),
                    Int(r.mode as u64),
                    Int(r.steps),
                    Float(r.empirical_second_moment),
                    Float(r.batch_means.mean_stderr),
                    Float(r.discrete_exact),
                    Float(r.continuous_exact),
                ]],
            },
            Payload::Lln { points, .. } => Table {
                columns: vec!["tau", "m", "n", "mean_abs_error", "stderr", "n_replicas"],
                rows: points
                    .iter()
                    .map(|p| {
                        vec![
                            Float(p.tau),
                            Int(p.m),
                            Int(p.dim as u64),
                            Float(p.mean_abs_error),
                            Float(p.stderr),
                            Int(p.replicas as u64),
                        ]
                    })
                    .collect(),
            },
            Payload::Clt { summary } => Table {
                columns: vec!["replica", "time_average", "deviation"],
                rows: summary
                    .sample
                    .time_averages
                    .iter()
                    .zip(&summary.sample.deviations)
                    .enumerate()
                    .map(|(r, (a, d))| vec![Int(r as u64), Float(*a), Float(*d)])
                    .collect(),
            },
            Payload::Decomposition { points } => Table {
                columns: vec!["tau", "replica", "deviation", "martingale", "remainder"],
                rows: points
                    .iter()
                    .flat_map(|p| {
                        let s = &p.sample;
                        (0..s.deviations.len()).map(move |r| {
                            vec![Float(p.tau), Int(r as u64), Float(s.deviations[r]), Float(s.martingale[r]), Float(s.remainder[r])]
                        })
                    })
                    .collect(),
            },
        }
    }
}

impl Table {
    /// RFC 4180 CSV (CRLF line endings, header row).
    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(Vec::new());
        w.write_record(&self.columns)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::to_string))?;
        }
        Ok(w.into_inner().map_err(|e| e.into_error())?)
    }

    /// Whitespace-separated columns under a `#` header.
    pub fn to_dat(&self) -> String {
        let mut out = format!("# {}\n", self.columns.join(" "));
        for row in &self.rows {
            let line: Vec<String> = row.iter().map(Cell::to_string).collect();
            out.push_str(&line.join(" "));
            out.push('\n');
        }
        out
    }
}

impl ExperimentResult {
    pub fn table(&self) -> Table {
        self.payload.table()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("result serializes")
    }

    /// Writes `<name>.json`, `<name>.csv` and `<name>.dat` into `dir`.
    pub fn write(&self, dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir)?;
        let table = self.table();
        let files = [
            (dir.join(format!("{}.json", self.name)), self.to_json().into_bytes()),
            (dir.join(format!("{}.csv", self.name)), table.to_csv()?),
            (dir.join(format!("{}.dat", self.name)), table.to_dat().into_bytes()),
        ];
        let mut written = Vec::new();
        for (path, bytes) in files {
            fs::write(&path, bytes)?;
            written.push(path);
        }
        Ok(written)
    }
}
