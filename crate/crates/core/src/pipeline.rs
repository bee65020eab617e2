//! End-to-end audit: attack phase on synthetic rows only, then (optionally)
//! evaluation against the real table, report emission, and replay checks.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::cluster::{dbscan, extract_medoids, ClusterLabeling, DbscanParams, EpsMode, MedoidSet};
use crate::dataset::{load_csv, unify_schema, DataTable, Origin};
use crate::encoder::{
    encode_for, encode_unreduced, fit_encoding, EncodedMatrix, EncodingModel, Metric, ScaleMode,
};
use crate::error::{Error, Result, Stage, StageExt};
use crate::harness::{make_real, sample_synthetic, HarnessScenario};
use crate::metrics::{
    asr_curve, coverage_curve, nearest_real_distances, DistanceRecord, ThresholdGrid,
};
use crate::pca::{default_target_dim, fit_pca};
use crate::report::{
    build_report, emit_curves_csv, emit_heatmap_cell, emit_records_csv, emit_summary_table,
    heatmap_file_name, write_curves_csv, write_records_csv, write_summary_table, EvaluationInputs,
    LeakageReport, ReportInputs,
};

pub const REPORT_FILE: &str = "report.json";
pub const MODEL_FILE: &str = "encoding_model.json";
pub const LABELS_FILE: &str = "labels.csv";
pub const MEDOIDS_FILE: &str = "medoids.csv";
pub const MEDOIDS_SIDECAR: &str = "medoids.json";
pub const CURVES_FILE: &str = "curves.csv";
pub const RECORDS_FILE: &str = "dmin_records.csv";
pub const SUMMARY_FILE: &str = "summary.csv";

/// Absolute tolerance of the replay check.
pub const VERIFY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum EpsSetting {
    #[default]
    Auto,
    Fixed(f64),
}

impl fmt::Display for EpsSetting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EpsSetting::Auto => f.write_str("auto"),
            EpsSetting::Fixed(e) => write!(f, "{e}"),
        }
    }
}

impl FromStr for EpsSetting {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        if s == "auto" {
            return Ok(EpsSetting::Auto);
        }
        s.parse::<f64>()
            .map(EpsSetting::Fixed)
            .map_err(|_| Error::Config(format!("eps must be a number or `auto`, got `{s}`")))
    }
}

impl From<EpsSetting> for String {
    fn from(e: EpsSetting) -> String {
        e.to_string()
    }
}

impl TryFrom<String> for EpsSetting {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum PcaSetting {
    #[default]
    Off,
    /// `min(D, 50)` components.
    Auto,
    Dims(usize),
}

impl fmt::Display for PcaSetting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PcaSetting::Off => f.write_str("off"),
            PcaSetting::Auto => f.write_str("auto"),
            PcaSetting::Dims(d) => write!(f, "{d}"),
        }
    }
}

impl FromStr for PcaSetting {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "off" => Ok(PcaSetting::Off),
            "auto" => Ok(PcaSetting::Auto),
            _ => s.parse::<usize>().map(PcaSetting::Dims).map_err(|_| {
                Error::Config(format!(
                    "pca must be `off`, `auto` or a dimension, got `{s}`"
                ))
            }),
        }
    }
}

impl From<PcaSetting> for String {
    fn from(p: PcaSetting) -> String {
        p.to_string()
    }
}

impl TryFrom<String> for PcaSetting {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

/// Everything a run depends on. With the input files, this reproduces every
/// emitted number.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AuditConfig {
    pub synthetic: Option<PathBuf>,
    pub real: Option<PathBuf>,
    pub out: Option<PathBuf>,
    /// Defaults to the real file stem.
    pub dataset_label: String,
    /// Defaults to the synthetic file stem.
    pub generator_label: String,
    pub scale: ScaleMode,
    pub pca: PcaSetting,
    pub eps: EpsSetting,
    pub min_samples: usize,
    pub index_threshold: usize,
    /// `start:stop:step`.
    pub grid: String,
    pub marks: Vec<f64>,
    pub metric: Metric,
    pub seed: u64,
    pub records: bool,
    pub verify: bool,
}

impl Default for AuditConfig {
    fn default() -> Self {
        let dbscan = DbscanParams::default();
        AuditConfig {
            synthetic: None,
            real: None,
            out: None,
            dataset_label: String::new(),
            generator_label: String::new(),
            scale: ScaleMode::Minmax,
            pca: PcaSetting::Off,
            eps: EpsSetting::Auto,
            min_samples: dbscan.min_samples,
            index_threshold: dbscan.index_threshold,
            grid: "0:2.5:0.01".into(),
            marks: vec![0.1, 0.5],
            metric: Metric::Euclidean,
            seed: 0,
            records: false,
            verify: false,
        }
    }
}

impl AuditConfig {
    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn dbscan_params(&self) -> DbscanParams {
        let (eps_mode, eps) = match self.eps {
            EpsSetting::Auto => (EpsMode::Auto, 0.0),
            EpsSetting::Fixed(e) => (EpsMode::Fixed, e),
        };
        DbscanParams {
            eps_mode,
            eps,
            min_samples: self.min_samples,
            index_threshold: self.index_threshold,
        }
    }

    pub fn threshold_grid(&self) -> Result<ThresholdGrid> {
        ThresholdGrid::from_range_spec(&self.grid, &self.marks)
    }

    /// Validates the configuration and fills in derived defaults: absolute
    /// paths and labels.
    pub fn resolved(&self) -> Result<AuditConfig> {
        let mut c = self.clone();
        let synthetic = c
            .synthetic
            .as_ref()
            .ok_or_else(|| Error::Config("a synthetic CSV is required".into()))?;
        c.synthetic = Some(absolute(synthetic));
        c.real = c.real.as_deref().map(absolute);
        c.out = Some(absolute(c.out.as_deref().unwrap_or(Path::new("cmla-out"))));
        if c.generator_label.is_empty() {
            c.generator_label = stem(c.synthetic.as_deref().unwrap());
        }
        if c.dataset_label.is_empty() {
            c.dataset_label = c.real.as_deref().map_or_else(|| "dataset".into(), stem);
        }
        if c.metric == Metric::Gower && c.pca != PcaSetting::Off {
            return Err(Error::Config(
                "pca applies to the euclidean encoding only".into(),
            ));
        }
        if c.records && c.real.is_none() {
            return Err(Error::Config("per-medoid records need a real CSV".into()));
        }
        c.dbscan_params().validate()?;
        c.threshold_grid()?;
        Ok(c)
    }
}

fn absolute(p: &Path) -> PathBuf {
    std::path::absolute(p).unwrap_or_else(|_| p.to_path_buf())
}

fn stem(p: &Path) -> String {
    p.file_stem()
        .map_or_else(|| "unnamed".into(), |s| s.to_string_lossy().into_owned())
}

/// Output of the synthetic-only half of the pipeline.
#[derive(Debug)]
pub struct AttackArtifacts {
    pub synthetic: DataTable,
    pub model: EncodingModel,
    pub encoded: EncodedMatrix,
    pub labeling: ClusterLabeling,
    pub medoids: MedoidSet,
}

#[derive(Debug)]
pub struct EvaluationArtifacts {
    pub real: DataTable,
    pub encoded: EncodedMatrix,
    pub grid: ThresholdGrid,
    pub records: Vec<DistanceRecord>,
    pub asr: Vec<f64>,
    pub coverage: Vec<f64>,
}

/// Fits the shared representation from the synthetic table alone.
pub fn fit_model(synthetic: &DataTable, config: &AuditConfig) -> Result<EncodingModel> {
    let model = fit_encoding(synthetic, config.scale)?;
    let dims = match config.pca {
        PcaSetting::Off => return Ok(model),
        PcaSetting::Auto => default_target_dim(model.raw_dim()),
        PcaSetting::Dims(d) => d,
    };
    let raw = encode_unreduced(&model, synthetic)?;
    let pca = fit_pca(&raw, dims)?;
    model.with_pca(pca)
}

/// Loads, encodes and clusters the synthetic table and extracts medoids.
/// Uses `model` instead of fitting one when given.
pub fn attack_phase(config: &AuditConfig, model: Option<EncodingModel>) -> Result<AttackArtifacts> {
    let path = config
        .synthetic
        .as_ref()
        .ok_or_else(|| Error::Config("a synthetic CSV is required".into()))
        .stage(Stage::Dataset)?;
    let synthetic = load_csv(path, None, Origin::Synthetic).stage(Stage::Dataset)?;
    unify_schema(&synthetic, None).stage(Stage::Dataset)?;
    let model = match model {
        Some(m) => m,
        None => fit_model(&synthetic, config).stage(Stage::Encoder)?,
    };
    let encoded = encode_for(&model, &synthetic, config.metric).stage(Stage::Encoder)?;
    let labeling = dbscan(&encoded, &config.dbscan_params()).stage(Stage::Cluster)?;
    let medoids = extract_medoids(&encoded, &labeling, &synthetic).stage(Stage::Cluster)?;
    Ok(AttackArtifacts {
        synthetic,
        model,
        encoded,
        labeling,
        medoids,
    })
}

/// Compares medoids with the real table. Runs only after clustering is done.
pub fn evaluation_phase(
    config: &AuditConfig,
    attack: &AttackArtifacts,
    real_path: &Path,
) -> Result<EvaluationArtifacts> {
    let real =
        load_csv(real_path, Some(attack.synthetic.schema()), Origin::Real).stage(Stage::Dataset)?;
    unify_schema(&attack.synthetic, Some(&real)).stage(Stage::Dataset)?;
    let encoded = encode_for(&attack.model, &real, config.metric).stage(Stage::Encoder)?;
    let grid = config.threshold_grid().stage(Stage::Metrics)?;
    let records = nearest_real_distances(&attack.medoids, &encoded).stage(Stage::Metrics)?;
    let asr = asr_curve(&records, &grid).stage(Stage::Metrics)?;
    let coverage = coverage_curve(&attack.medoids, &encoded, &grid).stage(Stage::Metrics)?;
    Ok(EvaluationArtifacts {
        real,
        encoded,
        grid,
        records,
        asr,
        coverage,
    })
}

fn assemble(
    config: &AuditConfig,
    attack: &AttackArtifacts,
    eval: Option<&EvaluationArtifacts>,
) -> Result<LeakageReport> {
    build_report(ReportInputs {
        dataset: config.dataset_label.clone(),
        generator: config.generator_label.clone(),
        config: config.clone(),
        model: &attack.model,
        labeling: &attack.labeling,
        medoids: &attack.medoids,
        evaluation: eval.map(|e| EvaluationInputs {
            real: &e.encoded,
            records: e.records.clone(),
            grid: &e.grid,
            asr: e.asr.clone(),
            coverage: e.coverage.clone(),
        }),
        include_records: config.records,
    })
    .stage(Stage::Report)
}

#[derive(Debug)]
pub struct AuditOutcome {
    pub report: LeakageReport,
    pub attack: AttackArtifacts,
    pub evaluation: Option<EvaluationArtifacts>,
    pub files: Vec<PathBuf>,
    /// Stages in the order they ran.
    pub trace: Vec<&'static str>,
    pub verification: Option<VerifySummary>,
}

/// Runs the full audit and writes all outputs into `config.out`.
pub fn run_audit(config: &AuditConfig) -> Result<AuditOutcome> {
    let config = config.resolved().stage(Stage::Pipeline)?;
    let mut trace = vec!["attack"];
    let attack = attack_phase(&config, None)?;
    trace.push("clustered");
    let evaluation = match &config.real {
        Some(path) => {
            trace.push("load_real");
            Some(evaluation_phase(&config, &attack, path)?)
        }
        None => None,
    };
    let report = assemble(&config, &attack, evaluation.as_ref())?;
    let out = config
        .out
        .clone()
        .expect("resolved config has an output dir");
    let files = write_outputs(&out, &report, &attack, evaluation.as_ref()).stage(Stage::Report)?;
    trace.push("written");
    let verification = if config.verify {
        Some(verify_report(out.join(REPORT_FILE))?)
    } else {
        None
    };
    Ok(AuditOutcome {
        report,
        attack,
        evaluation,
        files,
        trace,
        verification,
    })
}

fn write_outputs(
    out: &Path,
    report: &LeakageReport,
    attack: &AttackArtifacts,
    eval: Option<&EvaluationArtifacts>,
) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let mut files = Vec::new();
    attack.model.save(out.join(MODEL_FILE))?;
    files.push(out.join(MODEL_FILE));

    let labels_path = out.join(LABELS_FILE);
    let f = std::fs::File::create(&labels_path).map_err(|e| Error::io(&labels_path, e))?;
    attack
        .labeling
        .write_csv(attack.encoded.row_ids(), std::io::BufWriter::new(f))?;
    files.push(labels_path);

    attack.medoids.save(
        &attack.labeling,
        &out.join(MEDOIDS_FILE),
        &out.join(MEDOIDS_SIDECAR),
    )?;
    files.push(out.join(MEDOIDS_FILE));
    files.push(out.join(MEDOIDS_SIDECAR));

    if let Some(ev) = eval {
        emit_curves_csv(report, out.join(CURVES_FILE))?;
        emit_records_csv(&ev.records, out.join(RECORDS_FILE))?;
        emit_summary_table(std::slice::from_ref(report), out.join(SUMMARY_FILE))?;
        files.extend([CURVES_FILE, RECORDS_FILE, SUMMARY_FILE].map(|f| out.join(f)));
    }
    report.save(out.join(REPORT_FILE))?;
    files.push(out.join(REPORT_FILE));
    Ok(files)
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifySummary {
    /// Number of numeric values compared.
    pub numbers_checked: usize,
    pub files_checked: usize,
}

/// Recomputes a stored report from its configuration and the serialized
/// encoding model, and diffs every number in the report and its CSV files.
pub fn verify_report(report_path: impl AsRef<Path>) -> Result<VerifySummary> {
    let report_path = report_path.as_ref();
    let dir = report_path.parent().unwrap_or(Path::new("."));
    let stored = LeakageReport::load(report_path).stage(Stage::Report)?;
    let config = stored.metadata.config.clone();
    let stored_model = EncodingModel::load(dir.join(MODEL_FILE)).stage(Stage::Encoder)?;
    let mut numbers = 0usize;

    // the stored model must be what the synthetic file fits to
    let synthetic = load_csv(
        config
            .synthetic
            .as_ref()
            .ok_or_else(|| Error::Verify("report has no synthetic path".into()))?,
        None,
        Origin::Synthetic,
    )
    .stage(Stage::Dataset)?;
    let refit = fit_model(&synthetic, &config).stage(Stage::Encoder)?;
    compare_json(
        &serde_json::to_value(&refit)?,
        &serde_json::to_value(&stored_model)?,
        "encoding_model",
        &mut numbers,
    )?;

    let attack = attack_phase(&config, Some(stored_model))?;
    let evaluation = match &config.real {
        Some(p) => Some(evaluation_phase(&config, &attack, p)?),
        None => None,
    };
    let replay = assemble(&config, &attack, evaluation.as_ref())?;
    compare_json(
        &serde_json::to_value(&replay)?,
        &serde_json::to_value(&stored)?,
        "report",
        &mut numbers,
    )?;

    let mut files = 1;
    let mut expect = |name: &str, text: Vec<u8>| -> Result<()> {
        compare_csv(&text, &dir.join(name), &mut numbers)?;
        files += 1;
        Ok(())
    };
    let mut buf = Vec::new();
    attack
        .labeling
        .write_csv(attack.encoded.row_ids(), &mut buf)?;
    expect(LABELS_FILE, std::mem::take(&mut buf))?;
    attack.medoids.write_csv(&mut buf)?;
    expect(MEDOIDS_FILE, std::mem::take(&mut buf))?;
    if let Some(ev) = &evaluation {
        write_curves_csv(&replay, &mut buf)?;
        expect(CURVES_FILE, std::mem::take(&mut buf))?;
        write_records_csv(&ev.records, &mut buf)?;
        expect(RECORDS_FILE, std::mem::take(&mut buf))?;
        write_summary_table(std::slice::from_ref(&replay), &mut buf)?;
        expect(SUMMARY_FILE, std::mem::take(&mut buf))?;
    }
    Ok(VerifySummary {
        numbers_checked: numbers,
        files_checked: files,
    })
}

fn compare_json(fresh: &Value, stored: &Value, path: &str, count: &mut usize) -> Result<()> {
    let fail = |what: String| Err(Error::Verify(format!("{path}: {what}")));
    match (fresh, stored) {
        (Value::Number(a), Value::Number(b)) => {
            let (x, y) = (
                a.as_f64().unwrap_or(f64::NAN),
                b.as_f64().unwrap_or(f64::NAN),
            );
            *count += 1;
            if (x - y).abs() <= VERIFY_TOL || x == y {
                Ok(())
            } else {
                fail(format!("recomputed {x} vs stored {y}"))
            }
        }
        (Value::Array(a), Value::Array(b)) => {
            if a.len() != b.len() {
                return fail(format!("length {} vs {}", a.len(), b.len()));
            }
            for (i, (x, y)) in a.iter().zip(b).enumerate() {
                compare_json(x, y, &format!("{path}[{i}]"), count)?;
            }
            Ok(())
        }
        (Value::Object(a), Value::Object(b)) => {
            if a.len() != b.len() || a.keys().any(|k| !b.contains_key(k)) {
                return fail("field sets differ".into());
            }
            for (k, x) in a {
                compare_json(x, &b[k], &format!("{path}.{k}"), count)?;
            }
            Ok(())
        }
        (a, b) if a == b => Ok(()),
        (a, b) => fail(format!("recomputed {a} vs stored {b}")),
    }
}

fn compare_csv(expected: &[u8], path: &Path, count: &mut usize) -> Result<()> {
    let read = |r: csv::Reader<&[u8]>| -> Result<Vec<csv::StringRecord>> {
        r.into_records().map(|x| x.map_err(Error::from)).collect()
    };
    let stored_bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let builder = || {
        let mut b = csv::ReaderBuilder::new();
        b.has_headers(false);
        b
    };
    let want = read(builder().from_reader(expected))?;
    let have = read(builder().from_reader(&stored_bytes[..]))?;
    let name = path.display();
    if want.len() != have.len() {
        return Err(Error::Verify(format!(
            "{name}: {} rows vs {}",
            want.len(),
            have.len()
        )));
    }
    for (r, (a, b)) in want.iter().zip(&have).enumerate() {
        if a.len() != b.len() {
            return Err(Error::Verify(format!("{name}: row {r} width differs")));
        }
        for (x, y) in a.iter().zip(b) {
            match (x.parse::<f64>(), y.parse::<f64>()) {
                (Ok(p), Ok(q)) => {
                    *count += 1;
                    if !((p - q).abs() <= VERIFY_TOL || p == q) {
                        return Err(Error::Verify(format!("{name}: row {r}: {p} vs {q}")));
                    }
                }
                _ if x == y => {}
                _ => return Err(Error::Verify(format!("{name}: row {r}: `{x}` vs `{y}`"))),
            }
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrderingCheck {
    pub tau: f64,
    /// (generator label, ASR at tau) in the declared order.
    pub values: Vec<(String, f64)>,
    pub satisfied: bool,
}

#[derive(Debug)]
pub struct ScenarioOutcome {
    pub reports: Vec<LeakageReport>,
    pub files: Vec<PathBuf>,
    pub ordering: Option<OrderingCheck>,
}

fn check_label(label: &str) -> Result<()> {
    let ok = !label.is_empty()
        && label
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.'))
        && label != "."
        && label != "..";
    if ok {
        Ok(())
    } else {
        Err(Error::Scenario(format!(
            "generator label `{label}` must be [A-Za-z0-9_.-]+"
        )))
    }
}

pub fn load_scenario(path: impl AsRef<Path>) -> Result<HarnessScenario> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Scenario(e.to_string()))
}

/// Generates the scenario's tables, audits every generator, and writes one
/// coverage heatmap per marked threshold plus a combined summary table.
pub fn run_scenario(
    scenario_path: impl AsRef<Path>,
    out_dir: impl AsRef<Path>,
) -> Result<ScenarioOutcome> {
    let scenario = load_scenario(scenario_path).stage(Stage::Harness)?;
    run_scenario_spec(&scenario, out_dir.as_ref())
}

pub fn run_scenario_spec(scenario: &HarnessScenario, out_dir: &Path) -> Result<ScenarioOutcome> {
    scenario.validate().stage(Stage::Harness)?;
    for (i, g) in scenario.generators.iter().enumerate() {
        check_label(&g.label).stage(Stage::Harness)?;
        if scenario.generators[..i].iter().any(|o| o.label == g.label) {
            return Err(
                Error::Scenario(format!("duplicate generator label `{}`", g.label))
                    .at(Stage::Harness),
            );
        }
    }
    std::fs::create_dir_all(out_dir)
        .map_err(|e| Error::io(out_dir, e))
        .stage(Stage::Harness)?;
    let real = make_real(&scenario.real).stage(Stage::Harness)?;
    let real_path = out_dir.join("real.csv");
    real.save_csv(&real_path).stage(Stage::Harness)?;
    let mut files = vec![real_path.clone()];

    let mut reports = Vec::new();
    for g in &scenario.generators {
        let dir = out_dir.join(&g.label);
        std::fs::create_dir_all(&dir)
            .map_err(|e| Error::io(&dir, e))
            .stage(Stage::Harness)?;
        let synth = sample_synthetic(&real, &g.spec).stage(Stage::Harness)?;
        let synth_path = dir.join("synthetic.csv");
        synth.save_csv(&synth_path).stage(Stage::Harness)?;
        files.push(synth_path.clone());

        let config = AuditConfig {
            synthetic: Some(synth_path),
            real: Some(real_path.clone()),
            out: Some(dir),
            dataset_label: scenario.dataset.clone(),
            generator_label: g.label.clone(),
            seed: g.spec.seed,
            ..scenario.audit.clone()
        };
        let outcome = run_audit(&config)?;
        files.extend(outcome.files);
        reports.push(outcome.report);
    }

    let grid = scenario.audit.threshold_grid().stage(Stage::Report)?;
    for &tau in grid.marks() {
        let path = out_dir.join(heatmap_file_name(tau));
        emit_heatmap_cell(&reports, tau, &path).stage(Stage::Report)?;
        files.push(path);
    }
    let summary = out_dir.join(SUMMARY_FILE);
    emit_summary_table(&reports, &summary).stage(Stage::Report)?;
    files.push(summary);

    let ordering = match &scenario.expected_ordering {
        None => None,
        Some(exp) => {
            let mut values = Vec::new();
            for label in &exp.order {
                let r = reports
                    .iter()
                    .find(|r| &r.metadata.generator == label)
                    .ok_or_else(|| {
                        Error::Scenario(format!("ordering names unknown generator `{label}`"))
                    })
                    .stage(Stage::Harness)?;
                let asr = r
                    .asr_at(exp.tau)
                    .ok_or(Error::TauNotOnGrid(exp.tau))
                    .stage(Stage::Harness)?;
                values.push((label.clone(), asr));
            }
            let satisfied = values
                .windows(2)
                .enumerate()
                .all(|(i, w)| w[0].1 >= w[1].1 + exp.min_gaps.get(i).copied().unwrap_or(0.0));
            Some(OrderingCheck {
                tau: exp.tau,
                values,
                satisfied,
            })
        }
    };
    Ok(ScenarioOutcome {
        reports,
        files,
        ordering,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn settings_parse_and_print() {
        assert_eq!("auto".parse::<EpsSetting>().unwrap(), EpsSetting::Auto);
        assert_eq!(
            "0.25".parse::<EpsSetting>().unwrap(),
            EpsSetting::Fixed(0.25)
        );
        assert!("x".parse::<EpsSetting>().is_err());
        assert_eq!("7".parse::<PcaSetting>().unwrap(), PcaSetting::Dims(7));
        assert_eq!(PcaSetting::Auto.to_string(), "auto");
    }

    #[test]
    fn config_json_round_trip() {
        let c = AuditConfig {
            synthetic: Some("s.csv".into()),
            eps: EpsSetting::Fixed(0.1),
            pca: PcaSetting::Dims(3),
            ..Default::default()
        };
        let json = serde_json::to_string(&c).unwrap();
        assert!(json.contains("\"eps\":\"0.1\""));
        assert_eq!(serde_json::from_str::<AuditConfig>(&json).unwrap(), c);
        let partial: AuditConfig = serde_json::from_str(r#"{"min_samples": 8}"#).unwrap();
        assert_eq!(partial.min_samples, 8);
        assert_eq!(partial.grid, "0:2.5:0.01");
        assert!(serde_json::from_str::<AuditConfig>(r#"{"bogus": 1}"#).is_err());
    }

    #[test]
    fn resolve_requires_synthetic_and_fills_labels() {
        assert!(AuditConfig::default().resolved().is_err());
        let c = AuditConfig {
            synthetic: Some("dir/ctgan.csv".into()),
            real: Some("adult.csv".into()),
            ..Default::default()
        }
        .resolved()
        .unwrap();
        assert_eq!(c.generator_label, "ctgan");
        assert_eq!(c.dataset_label, "adult");
        assert!(c.synthetic.unwrap().is_absolute());
    }

    #[test]
    fn gower_with_pca_rejected() {
        let c = AuditConfig {
            synthetic: Some("s.csv".into()),
            metric: Metric::Gower,
            pca: PcaSetting::Auto,
            ..Default::default()
        };
        assert!(c.resolved().is_err());
    }
}
