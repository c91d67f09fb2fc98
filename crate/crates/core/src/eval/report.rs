use std::fmt::Write as _;
use std::fs;
use std::path::{Path as FsPath, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::folds::mean;
use crate::encode::CostReport;
use crate::error::{Error, Result};

pub const REPORT_VERSION: u32 = 1;

/// Representation label used for the coordinate baselines.
pub const NO_REPRESENTATION: &str = "-";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub source: String,
    pub nodes: usize,
    pub edges: usize,
    /// Trips read before snapping (0 when starting from snapped paths).
    pub trips_read: usize,
    pub dropped_rows: usize,
    pub degenerate: usize,
    pub unreachable: usize,
    /// Entries removed by balancing, out-of-range plus bin down-sampling.
    pub removed_by_balancing: usize,
    pub samples: usize,
    pub target_mean: f64,
}

/// Cross-validated result of one (representation, model) pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub representation: String,
    pub model: String,
    pub mean_rmse: Option<f64>,
    pub std_rmse: Option<f64>,
    pub fold_rmse: Vec<f64>,
    /// Selected hyper-parameters (grid winner, or per-fold area radii).
    pub hyperparams: serde_json::Value,
    pub grid_cells: usize,
    pub cost: Option<CostReport>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub version: u32,
    pub config: ExperimentConfig,
    pub dataset: DatasetSummary,
    pub rows: Vec<ReportRow>,
}

/// Wall-clock seconds spent on a row, kept apart from the report so reports
/// stay byte-identical across runs.
#[derive(Debug, Clone, PartialEq)]
pub struct Timing {
    pub representation: String,
    pub model: String,
    pub encode_seconds: f64,
    pub train_seconds: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmittedFiles {
    pub report: PathBuf,
    pub summary: PathBuf,
    pub plot: PathBuf,
}

impl EvalReport {
    pub fn validate(&self) -> Result<()> {
        if self.rows.is_empty() {
            return Err(Error::InvalidArgument("report has no rows".into()));
        }
        for row in &self.rows {
            let name = format!("{} / {}", row.representation, row.model);
            match (&row.error, row.mean_rmse) {
                (Some(_), None) => {}
                (None, Some(m)) => {
                    if row.fold_rmse.is_empty() {
                        return Err(Error::InvalidArgument(format!("row {name} has no fold scores")));
                    }
                    if (mean(&row.fold_rmse) - m).abs() > 1e-12 {
                        return Err(Error::InvalidArgument(format!("row {name}: mean does not match its folds")));
                    }
                }
                _ => return Err(Error::InvalidArgument(format!("row {name} needs a score or an error"))),
            }
        }
        Ok(())
    }

    pub fn row(&self, representation: &str, model: &str) -> Option<&ReportRow> {
        self.rows.iter().find(|r| r.representation == representation && r.model == model)
    }

    pub fn to_json(&self) -> Result<String> {
        self.validate()?;
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let report: EvalReport = serde_json::from_str(text)?;
        if report.version != REPORT_VERSION {
            return Err(Error::InvalidArgument(format!("unsupported report version {}", report.version)));
        }
        report.validate()?;
        Ok(report)
    }

    /// Aligned text table, one line per row.
    pub fn summary_table(&self) -> String {
        let header = ["representation", "model", "mean_rmse", "std_rmse", "n_features", "mean_nnz"];
        let cell = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.4}"));
        let lines: Vec<[String; 6]> = self
            .rows
            .iter()
            .map(|r| {
                [
                    r.representation.clone(),
                    r.model.clone(),
                    r.error.as_ref().map_or_else(|| cell(r.mean_rmse), |_| "failed".into()),
                    cell(r.std_rmse),
                    r.cost.as_ref().map_or("-".into(), |c| c.n_features.to_string()),
                    r.cost.as_ref().map_or("-".into(), |c| format!("{:.2}", c.mean_nonzeros)),
                ]
            })
            .collect();
        let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
        for l in &lines {
            for (w, c) in widths.iter_mut().zip(l) {
                *w = (*w).max(c.len());
            }
        }
        let mut out = String::new();
        let mut push = |cells: &[&str]| {
            let mut line = String::new();
            for (i, (c, w)) in cells.iter().zip(&widths).enumerate() {
                if i < 2 {
                    write!(line, "{c:<w$}  ").unwrap();
                } else {
                    write!(line, "{c:>w$}  ").unwrap();
                }
            }
            out.push_str(line.trim_end());
            out.push('\n');
        };
        push(&header);
        for l in &lines {
            push(&l.iter().map(String::as_str).collect::<Vec<_>>());
        }
        let d = &self.dataset;
        writeln!(
            out,
            "\n{} samples, {} folds, seed {}; {} nodes, {} edges",
            d.samples, self.config.folds, self.config.seed, d.nodes, d.edges
        )
        .unwrap();
        for r in self.rows.iter().filter(|r| r.error.is_some()) {
            writeln!(out, "{} / {} failed: {}", r.representation, r.model, r.error.as_deref().unwrap()).unwrap();
        }
        out
    }

    /// `representation,model,mean,std` for plotting; failed rows are omitted.
    pub fn plot_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["representation", "model", "mean", "std"])?;
        for r in &self.rows {
            if let (Some(m), Some(s)) = (r.mean_rmse, r.std_rmse) {
                w.write_record([r.representation.as_str(), r.model.as_str(), &m.to_string(), &s.to_string()])?;
            }
        }
        let bytes = w.into_inner().map_err(|e| Error::InvalidArgument(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

/// Writes `report.json`, `summary.txt` and `plot.csv` into `dir`.
pub fn emit_report(report: &EvalReport, dir: &FsPath) -> Result<EmittedFiles> {
    let json = report.to_json()?;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let files = EmittedFiles {
        report: dir.join("report.json"),
        summary: dir.join("summary.txt"),
        plot: dir.join("plot.csv"),
    };
    let write = |p: &PathBuf, s: &str| fs::write(p, s).map_err(|e| Error::io(p, e));
    write(&files.report, &json)?;
    write(&files.summary, &report.summary_table())?;
    write(&files.plot, &report.plot_csv()?)?;
    Ok(files)
}

pub fn read_report(path: &FsPath) -> Result<EvalReport> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    EvalReport::from_json(&text)
}

pub fn write_timings(timings: &[Timing], path: &FsPath) -> Result<()> {
    let mut out = String::from("representation\tmodel\tencode_seconds\ttrain_seconds\n");
    for t in timings {
        writeln!(out, "{}\t{}\t{:.3}\t{:.3}", t.representation, t.model, t.encode_seconds, t.train_seconds).unwrap();
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}
