//! Leakage reports and their plot-ready CSV companions.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::cluster::{ClusterLabeling, MedoidEntry, MedoidSet};
use crate::encoder::{EncodedMatrix, EncodingModel};
use crate::error::{Error, Result};
use crate::metrics::{
    summarize_dmin, DistanceRecord, DminSummary, MetricCurves, ThresholdGrid, GRID_MATCH_TOL,
};
use crate::pipeline::AuditConfig;

pub const SCHEMA_VERSION: u32 = 1;
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Column order of the d_min summary table.
pub const SUMMARY_COLUMNS: [&str; 7] = ["M", "min", "mean", "median", "max", "p10", "p90"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub dataset: String,
    pub generator: String,
    pub tool_version: String,
    pub model_fingerprint: String,
    /// Effective configuration after merging file, flags and defaults.
    pub config: AuditConfig,
    /// Clustering parameters with eps resolved.
    pub clustering: crate::cluster::DbscanParams,
    pub encoded_dim: usize,
    pub n_synthetic: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReferenceReadout {
    pub tau: f64,
    pub asr: f64,
    pub coverage: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub n_real: usize,
    pub dmin: DminSummary,
    pub reference: Vec<ReferenceReadout>,
    pub curves: MetricCurves,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub records: Option<Vec<DistanceRecord>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeakageReport {
    pub schema_version: u32,
    pub metadata: RunMetadata,
    pub k: usize,
    pub noise: usize,
    pub cluster_sizes: Vec<usize>,
    pub medoids: Vec<MedoidEntry>,
    /// Present only when real data was supplied.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub evaluation: Option<Evaluation>,
}

pub struct EvaluationInputs<'a> {
    pub real: &'a EncodedMatrix,
    pub records: Vec<DistanceRecord>,
    pub grid: &'a ThresholdGrid,
    pub asr: Vec<f64>,
    pub coverage: Vec<f64>,
}

pub struct ReportInputs<'a> {
    pub dataset: String,
    pub generator: String,
    pub config: AuditConfig,
    pub model: &'a EncodingModel,
    pub labeling: &'a ClusterLabeling,
    pub medoids: &'a MedoidSet,
    pub evaluation: Option<EvaluationInputs<'a>>,
    pub include_records: bool,
}

/// Assembles a report, checking that every artifact descends from the same
/// encoding model.
pub fn build_report(inputs: ReportInputs<'_>) -> Result<LeakageReport> {
    let fingerprint = inputs.model.fingerprint();
    if inputs.medoids.model_id() != fingerprint {
        return Err(Error::ModelMismatch(
            fingerprint,
            inputs.medoids.model_id().to_owned(),
        ));
    }
    let evaluation = match inputs.evaluation {
        None => None,
        Some(ev) => {
            if ev.real.model_id() != fingerprint {
                return Err(Error::ModelMismatch(
                    fingerprint,
                    ev.real.model_id().to_owned(),
                ));
            }
            let curves = MetricCurves::new(
                ev.grid,
                &ev.asr,
                &ev.coverage,
                inputs.medoids.len(),
                ev.real.len(),
            )?;
            curves.check_laws()?;
            let reference = ev
                .grid
                .marks()
                .iter()
                .map(|&m| {
                    let p = curves.at(m).ok_or(Error::TauNotOnGrid(m))?;
                    Ok(ReferenceReadout {
                        tau: p.tau,
                        asr: p.asr,
                        coverage: p.coverage,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            let dmin = summarize_dmin(&ev.records)?;
            Some(Evaluation {
                n_real: ev.real.len(),
                dmin,
                reference,
                curves,
                records: inputs.include_records.then_some(ev.records),
            })
        }
    };
    let sidecar = inputs.medoids.sidecar(inputs.labeling);
    Ok(LeakageReport {
        schema_version: SCHEMA_VERSION,
        metadata: RunMetadata {
            dataset: inputs.dataset,
            generator: inputs.generator,
            tool_version: TOOL_VERSION.to_owned(),
            model_fingerprint: fingerprint,
            config: inputs.config,
            clustering: inputs.labeling.params,
            encoded_dim: inputs.model.dim(),
            n_synthetic: inputs.labeling.labels.len(),
        },
        k: sidecar.k,
        noise: sidecar.noise,
        cluster_sizes: inputs.labeling.cluster_sizes(),
        medoids: sidecar.medoids,
        evaluation,
    })
}

impl LeakageReport {
    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    fn evaluation(&self) -> Result<&Evaluation> {
        self.evaluation
            .as_ref()
            .ok_or_else(|| Error::Report("report has no evaluation section (no real data)".into()))
    }

    /// Coverage at `tau`, if the report has curves on which `tau` lies.
    pub fn coverage_at(&self, tau: f64) -> Option<f64> {
        self.evaluation.as_ref()?.curves.at(tau).map(|p| p.coverage)
    }

    pub fn asr_at(&self, tau: f64) -> Option<f64> {
        self.evaluation.as_ref()?.curves.at(tau).map(|p| p.asr)
    }
}

fn flush<W: Write>(w: csv::Writer<W>) -> Result<()> {
    w.into_inner()
        .map_err(|e| Error::io("<csv writer>", e.into_error()))?
        .flush()
        .map_err(|e| Error::io("<csv writer>", e))
}

fn create(path: &Path) -> Result<std::io::BufWriter<std::fs::File>> {
    std::fs::File::create(path)
        .map(std::io::BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

/// `tau,asr,coverage`, ascending tau. Refuses to write curves that break
/// the grid or monotonicity invariants.
pub fn write_curves_csv<W: Write>(report: &LeakageReport, writer: W) -> Result<()> {
    let curves = &report.evaluation()?.curves;
    curves.check_laws()?;
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["tau", "asr", "coverage"])?;
    for p in &curves.points {
        w.write_record([p.tau.to_string(), p.asr.to_string(), p.coverage.to_string()])?;
    }
    flush(w)
}

pub fn emit_curves_csv(report: &LeakageReport, path: impl AsRef<Path>) -> Result<()> {
    write_curves_csv(report, create(path.as_ref())?)
}

/// Coverage matrix at `tau`: one row per generator, one column per dataset,
/// labels in first-appearance order. Missing pairs are left empty.
pub fn write_heatmap_cell<W: Write>(reports: &[LeakageReport], tau: f64, writer: W) -> Result<()> {
    let mut generators: Vec<&str> = Vec::new();
    let mut datasets: Vec<&str> = Vec::new();
    for r in reports {
        let ev = r.evaluation()?;
        if ev.curves.at(tau).is_none() {
            return Err(Error::TauNotOnGrid(tau));
        }
        if !generators.contains(&r.metadata.generator.as_str()) {
            generators.push(&r.metadata.generator);
        }
        if !datasets.contains(&r.metadata.dataset.as_str()) {
            datasets.push(&r.metadata.dataset);
        }
    }
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(std::iter::once("generator").chain(datasets.iter().copied()))?;
    for g in &generators {
        let mut row = vec![g.to_string()];
        for d in &datasets {
            let cell = reports
                .iter()
                .find(|r| r.metadata.generator == *g && r.metadata.dataset == *d)
                .and_then(|r| r.coverage_at(tau))
                .map(|c| c.to_string())
                .unwrap_or_default();
            row.push(cell);
        }
        w.write_record(&row)?;
    }
    flush(w)
}

pub fn emit_heatmap_cell(
    reports: &[LeakageReport],
    tau: f64,
    path: impl AsRef<Path>,
) -> Result<()> {
    write_heatmap_cell(reports, tau, create(path.as_ref())?)
}

/// File name used for the heatmap at `tau`, e.g. `heatmap_tau0.1.csv`.
pub fn heatmap_file_name(tau: f64) -> String {
    format!("heatmap_tau{tau}.csv")
}

/// `cluster_id,medoid_row,d_min,nearest_real_row`.
pub fn write_records_csv<W: Write>(records: &[DistanceRecord], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["cluster_id", "medoid_row", "d_min", "nearest_real_row"])?;
    for r in records {
        w.write_record([
            r.cluster_id.to_string(),
            r.medoid_row.to_string(),
            r.d_min.to_string(),
            r.nearest_real_row.to_string(),
        ])?;
    }
    flush(w)
}

pub fn emit_records_csv(records: &[DistanceRecord], path: impl AsRef<Path>) -> Result<()> {
    write_records_csv(records, create(path.as_ref())?)
}

/// The seven summary values in table order, as display strings (4 decimals).
pub fn summary_cells(s: &DminSummary) -> [String; 7] {
    [
        s.m.to_string(),
        format!("{:.4}", s.min),
        format!("{:.4}", s.mean),
        format!("{:.4}", s.median),
        format!("{:.4}", s.max),
        format!("{:.4}", s.p10),
        format!("{:.4}", s.p90),
    ]
}

/// One-line form, e.g. `M=46, min=0.0000, mean=0.0655, ...`.
pub fn render_summary_row(s: &DminSummary) -> String {
    SUMMARY_COLUMNS
        .iter()
        .zip(summary_cells(s))
        .map(|(k, v)| format!("{k}={v}"))
        .collect::<Vec<_>>()
        .join(", ")
}

/// `dataset,generator,M,min,mean,median,max,p10,p90`, one row per report
/// with an evaluation section.
pub fn write_summary_table<W: Write>(reports: &[LeakageReport], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(
        ["dataset", "generator"]
            .iter()
            .chain(SUMMARY_COLUMNS.iter()),
    )?;
    for r in reports {
        if let Some(ev) = &r.evaluation {
            let mut row = vec![r.metadata.dataset.clone(), r.metadata.generator.clone()];
            row.extend(summary_cells(&ev.dmin));
            w.write_record(&row)?;
        }
    }
    flush(w)
}

pub fn emit_summary_table(reports: &[LeakageReport], path: impl AsRef<Path>) -> Result<()> {
    write_summary_table(reports, create(path.as_ref())?)
}

/// Readout at a marked tau; `None` if the report has no curves or the tau is
/// not marked.
pub fn reference_readout(report: &LeakageReport, tau: f64) -> Option<ReferenceReadout> {
    report
        .evaluation
        .as_ref()?
        .reference
        .iter()
        .find(|r| (r.tau - tau).abs() <= GRID_MATCH_TOL)
        .copied()
}
