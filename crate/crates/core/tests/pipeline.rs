use std::path::{Path, PathBuf};

use cmla_core::pipeline::{
    run_scenario_spec, CURVES_FILE, LABELS_FILE, MEDOIDS_FILE, REPORT_FILE, SUMMARY_FILE,
};
use cmla_core::{
    make_real, run_audit, sample_synthetic, verify_report, AuditConfig, EpsSetting, Error,
    GeneratorKind, GeneratorSpec, HarnessScenario, LeakageReport, Metric, PcaSetting, Stage,
};

fn scenario() -> HarnessScenario {
    let mut sc: HarnessScenario = serde_json::from_str(include_str!("data/ordering.json")).unwrap();
    sc.real.n_rows = 400;
    for g in &mut sc.generators {
        g.spec.n_samples = 400;
    }
    sc
}

/// Writes a real table and a noised synthetic table; returns their paths.
fn fixture(dir: &Path) -> (PathBuf, PathBuf) {
    let real = make_real(&scenario().real).unwrap();
    let synth = sample_synthetic(
        &real,
        &GeneratorSpec::new(GeneratorKind::Noised { sigma: 0.05 }, 9, 400),
    )
    .unwrap();
    let (r, s) = (dir.join("real.csv"), dir.join("synth.csv"));
    real.save_csv(&r).unwrap();
    synth.save_csv(&s).unwrap();
    (r, s)
}

fn config(dir: &Path, real: Option<PathBuf>, synth: PathBuf) -> AuditConfig {
    AuditConfig {
        synthetic: Some(synth),
        real,
        out: Some(dir.join("out")),
        ..Default::default()
    }
}

#[test]
fn synthetic_only_run_has_no_evaluation() {
    let dir = tempfile::tempdir().unwrap();
    let (_, s) = fixture(dir.path());
    let out = run_audit(&config(dir.path(), None, s)).unwrap();
    assert!(out.report.evaluation.is_none());
    assert!(out.report.k > 0);
    assert!(!out.trace.contains(&"load_real"));
    let json = std::fs::read_to_string(dir.path().join("out").join(REPORT_FILE)).unwrap();
    assert!(!json.contains("\"curves\""));
    for f in [LABELS_FILE, MEDOIDS_FILE] {
        assert!(dir.path().join("out").join(f).exists());
    }
    assert!(!dir.path().join("out").join(CURVES_FILE).exists());
}

#[test]
fn real_table_is_read_after_clustering() {
    let dir = tempfile::tempdir().unwrap();
    let (r, s) = fixture(dir.path());
    let out = run_audit(&config(dir.path(), Some(r), s)).unwrap();
    let pos = |stage| out.trace.iter().position(|&t| t == stage).unwrap();
    assert!(pos("clustered") < pos("load_real"));
}

#[test]
fn malformed_real_csv_fails_in_dataset_stage() {
    let dir = tempfile::tempdir().unwrap();
    let (_, s) = fixture(dir.path());
    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "x0,x1\n1,2\n").unwrap();
    let err = run_audit(&config(dir.path(), Some(bad), s)).unwrap_err();
    assert_eq!(err.stage(), Some(Stage::Dataset));
    assert!(matches!(err.root(), Error::HeaderMismatch { .. }), "{err}");
}

#[test]
fn records_need_real_data() {
    let dir = tempfile::tempdir().unwrap();
    let (_, s) = fixture(dir.path());
    let c = AuditConfig {
        records: true,
        ..config(dir.path(), None, s)
    };
    assert!(matches!(
        run_audit(&c).unwrap_err().root(),
        Error::Config(_)
    ));
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let (r, s) = fixture(dir.path());
    let c = AuditConfig {
        records: true,
        ..config(dir.path(), Some(r), s)
    };
    let read = |f: &str| std::fs::read(dir.path().join("out").join(f)).unwrap();
    let files = [
        REPORT_FILE,
        LABELS_FILE,
        MEDOIDS_FILE,
        CURVES_FILE,
        SUMMARY_FILE,
    ];
    run_audit(&c).unwrap();
    let first: Vec<Vec<u8>> = files.iter().map(|f| read(f)).collect();
    run_audit(&c).unwrap();
    let second: Vec<Vec<u8>> = files.iter().map(|f| read(f)).collect();
    assert_eq!(first, second);
}

#[test]
fn gower_and_pca_runs_verify() {
    let dir = tempfile::tempdir().unwrap();
    let (r, s) = fixture(dir.path());
    for (i, (metric, pca)) in [
        (Metric::Gower, PcaSetting::Off),
        (Metric::Euclidean, PcaSetting::Dims(3)),
    ]
    .into_iter()
    .enumerate()
    {
        let c = AuditConfig {
            metric,
            pca,
            eps: EpsSetting::Auto,
            out: Some(dir.path().join(format!("out{i}"))),
            ..config(dir.path(), Some(r.clone()), s.clone())
        };
        let out = run_audit(&c).unwrap();
        assert!(out.report.evaluation.is_some());
        verify_report(dir.path().join(format!("out{i}")).join(REPORT_FILE)).unwrap();
    }
}

#[test]
fn gower_with_pca_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let (_, s) = fixture(dir.path());
    let c = AuditConfig {
        metric: Metric::Gower,
        pca: PcaSetting::Auto,
        ..config(dir.path(), None, s)
    };
    assert!(matches!(
        run_audit(&c).unwrap_err().root(),
        Error::Config(_)
    ));
}

#[test]
fn no_clusters_with_real_data_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let (r, s) = fixture(dir.path());
    let c = AuditConfig {
        eps: EpsSetting::Fixed(1e-9),
        min_samples: 50,
        ..config(dir.path(), Some(r), s)
    };
    let err = run_audit(&c).unwrap_err();
    assert_eq!(err.stage(), Some(Stage::Metrics));
}

#[test]
fn verify_catches_a_swapped_model() {
    let dir = tempfile::tempdir().unwrap();
    let (r, s) = fixture(dir.path());
    run_audit(&config(dir.path(), Some(r.clone()), s)).unwrap();
    // refit on a different synthetic table and drop its model in place
    let other = dir.path().join("other");
    run_audit(&AuditConfig {
        out: Some(other.clone()),
        ..config(dir.path(), None, r)
    })
    .unwrap();
    std::fs::copy(
        other.join("encoding_model.json"),
        dir.path().join("out").join("encoding_model.json"),
    )
    .unwrap();
    let err = verify_report(dir.path().join("out").join(REPORT_FILE)).unwrap_err();
    assert!(matches!(err.root(), Error::Verify(_)), "{err}");
}

#[test]
fn scenario_emits_reports_and_heatmaps() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_scenario_spec(&scenario(), dir.path()).unwrap();
    assert_eq!(out.reports.len(), 3);
    for tau in ["0.1", "0.5"] {
        let text =
            std::fs::read_to_string(dir.path().join(format!("heatmap_tau{tau}.csv"))).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "generator,mixture2");
        assert_eq!(lines.len(), 4);
    }
    for g in ["memorizer", "noised", "independent"] {
        let r = LeakageReport::load(dir.path().join(g).join(REPORT_FILE)).unwrap();
        assert_eq!(r.metadata.generator, g);
    }
    let mem = &out.reports[0];
    assert_eq!(mem.asr_at(0.1), Some(1.0));
}

#[test]
fn violated_ordering_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let mut sc = scenario();
    let o = sc.expected_ordering.as_mut().unwrap();
    o.order.reverse();
    o.min_gaps.clear();
    let out = run_scenario_spec(&sc, dir.path()).unwrap();
    assert!(!out.ordering.unwrap().satisfied);
}

#[test]
fn scenario_rejects_bad_labels() {
    let dir = tempfile::tempdir().unwrap();
    let mut sc = scenario();
    sc.generators[1].label = "../escape".into();
    assert!(run_scenario_spec(&sc, dir.path()).is_err());
    let mut sc = scenario();
    sc.generators[1].label = sc.generators[0].label.clone();
    assert!(run_scenario_spec(&sc, dir.path()).is_err());
}
