//! Cluster–medoid leakage audit for tabular synthetic data.
//!
//! Synthetic rows are encoded, clustered with DBSCAN, and each cluster is
//! reduced to its medoid. Medoids are then compared with the real table to
//! measure how many of them land near real records.

pub mod cluster;
pub mod dataset;
pub mod encoder;
pub mod error;
pub mod harness;
pub mod index;
pub mod metrics;
pub mod pca;
pub mod pipeline;
pub mod report;

pub use cluster::{
    auto_eps, dbscan, extract_medoids, ClusterLabeling, DbscanParams, EpsMode, Medoid, MedoidEntry,
    MedoidSet, MedoidSidecar, NOISE,
};
pub use dataset::{
    load_csv, read_csv, unify_schema, Cell, Column, ColumnKind, DataTable, Origin, TableSchema,
};
pub use encoder::{
    encode, encode_for, encode_gower, encode_unreduced, euclidean, fit_encoding, gower_distance,
    write_encoded_csv, EncodedMatrix, EncodingModel, Metric, ScaleMode, Space,
};
pub use error::{Error, Result, Stage};
pub use harness::{
    make_real, sample_synthetic, CategoricalSpec, ExpectedOrdering, GeneratorKind, GeneratorSpec,
    HarnessScenario, MixtureSpec, NamedGenerator, RealRecipe,
};
pub use index::ProjectionIndex;
pub use metrics::{
    asr_curve, coverage_curve, nearest_real_distances, nearest_real_distances_with,
    real_min_distances, summarize_dmin, CurvePoint, DistanceRecord, DminSummary, MetricCurves,
    SearchMode, ThresholdGrid,
};
pub use pca::{default_target_dim, fit_pca, PcaModel};
pub use pipeline::{
    attack_phase, evaluation_phase, fit_model, run_audit, run_scenario, verify_report, AuditConfig,
    AuditOutcome, EpsSetting, OrderingCheck, PcaSetting, ScenarioOutcome, VerifySummary,
};
pub use report::{build_report, LeakageReport, ReferenceReadout, RunMetadata};
