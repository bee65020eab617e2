use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use cmla_core::pipeline::{self, REPORT_FILE};
use cmla_core::{
    encode_for, fit_model, load_csv, write_encoded_csv, AuditConfig, EpsSetting, Error,
    LeakageReport, Metric, Origin, PcaSetting, ScaleMode, Stage,
};

/// Cluster-medoid leakage audit for tabular synthetic data.
#[derive(Parser)]
#[command(name = "cmla", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Cluster a synthetic CSV, extract medoids and, given the real table, score leakage.
    Audit(AuditArgs),
    /// Generate harness tables and audit every generator of a scenario file.
    Scenario {
        scenario: PathBuf,
        #[arg(long, default_value = "cmla-scenario")]
        out: PathBuf,
    },
    /// Recompute an existing report and diff every emitted number.
    Verify {
        /// Report JSON or the directory holding it.
        report: PathBuf,
    },
    /// Dump the encoded representation of a table.
    Encode {
        /// Table the encoder is fitted on.
        #[arg(long)]
        synthetic: PathBuf,
        /// Table to encode; defaults to the synthetic one.
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long, default_value = "minmax")]
        scale: ScaleMode,
        #[arg(long, default_value = "off")]
        pca: PcaSetting,
        #[arg(long, default_value = "euclidean")]
        metric: Metric,
        /// Output CSV; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args, Default)]
struct AuditArgs {
    /// JSON config; flags given here override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    synthetic: Option<PathBuf>,
    #[arg(long)]
    real: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Neighborhood radius, or `auto`.
    #[arg(long)]
    eps: Option<EpsSetting>,
    #[arg(long)]
    min_samples: Option<usize>,
    #[arg(long)]
    scale: Option<ScaleMode>,
    /// Target dimension, `auto` or `off`.
    #[arg(long)]
    pca: Option<PcaSetting>,
    /// Threshold grid as start:stop:step.
    #[arg(long)]
    grid: Option<String>,
    /// Reference thresholds, comma separated.
    #[arg(long, value_delimiter = ',')]
    mark: Option<Vec<f64>>,
    #[arg(long)]
    metric: Option<Metric>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    dataset_label: Option<String>,
    #[arg(long)]
    generator_label: Option<String>,
    /// Emit per-medoid distance records.
    #[arg(long)]
    records: bool,
    /// Replay the run and diff the outputs.
    #[arg(long)]
    verify: bool,
}

impl AuditArgs {
    fn into_config(self) -> anyhow::Result<AuditConfig> {
        let mut c = match &self.config {
            Some(path) => AuditConfig::from_json_file(path)
                .with_context(|| format!("reading config {}", path.display()))?,
            None => AuditConfig::default(),
        };
        macro_rules! take {
            ($($field:ident),*) => {$(
                if let Some(v) = self.$field {
                    c.$field = v.into();
                }
            )*};
        }
        take!(
            synthetic,
            real,
            out,
            eps,
            min_samples,
            scale,
            pca,
            grid,
            metric,
            seed
        );
        take!(dataset_label, generator_label);
        if let Some(m) = self.mark {
            c.marks = m;
        }
        c.records |= self.records;
        c.verify |= self.verify;
        Ok(c)
    }
}

const EXIT_DATASET: u8 = 2;
const EXIT_ORDERING: u8 = 3;
const EXIT_VERIFY: u8 = 4;

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(e) if matches!(e.root(), Error::Verify(_)) => EXIT_VERIFY,
        Some(e) if e.stage() == Some(Stage::Dataset) => EXIT_DATASET,
        _ => 1,
    }
}

fn main() -> ExitCode {
    if let Ok(n) = std::env::var("CMLA_THREADS") {
        match n.parse::<usize>() {
            Ok(n) if n > 0 => {
                let _ = rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build_global();
            }
            _ => eprintln!("warning: ignoring CMLA_THREADS={n}"),
        }
    }
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => code,
        Err(err) => {
            let stage = err
                .downcast_ref::<Error>()
                .and_then(Error::stage)
                .map_or("audit", Stage::name);
            eprintln!("error: stage {stage}: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}

fn run(command: Command) -> anyhow::Result<ExitCode> {
    match command {
        Command::Audit(args) => {
            let outcome = pipeline::run_audit(&args.into_config()?)?;
            print_report(&outcome.report);
            if let Some(v) = outcome.verification {
                println!(
                    "verified {} values in {} files",
                    v.numbers_checked, v.files_checked
                );
            }
            let out = outcome
                .files
                .last()
                .and_then(|p| p.parent())
                .unwrap_or(Path::new("."));
            println!("wrote {} files to {}", outcome.files.len(), out.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Scenario { scenario, out } => {
            let outcome = pipeline::run_scenario(&scenario, &out)?;
            for r in &outcome.reports {
                print_report(r);
            }
            match outcome.ordering {
                Some(check) => {
                    let values: Vec<String> = check
                        .values
                        .iter()
                        .map(|(label, asr)| format!("{label}={asr:.4}"))
                        .collect();
                    let verdict = if check.satisfied { "holds" } else { "VIOLATED" };
                    println!(
                        "ordering at tau={}: {} {verdict}",
                        check.tau,
                        values.join(" >= ")
                    );
                    if check.satisfied {
                        Ok(ExitCode::SUCCESS)
                    } else {
                        Ok(ExitCode::from(EXIT_ORDERING))
                    }
                }
                None => Ok(ExitCode::SUCCESS),
            }
        }
        Command::Verify { report } => {
            let path = if report.is_dir() {
                report.join(REPORT_FILE)
            } else {
                report
            };
            let v = pipeline::verify_report(&path)?;
            println!(
                "ok: {} values in {} files match within {}",
                v.numbers_checked,
                v.files_checked,
                pipeline::VERIFY_TOL
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Encode {
            synthetic,
            input,
            scale,
            pca,
            metric,
            out,
        } => {
            let config = AuditConfig {
                synthetic: Some(synthetic.clone()),
                scale,
                pca,
                metric,
                ..Default::default()
            }
            .resolved()?;
            let synth =
                load_csv(&synthetic, None, Origin::Synthetic).map_err(|e| e.at(Stage::Dataset))?;
            let model = fit_model(&synth, &config).map_err(|e| e.at(Stage::Encoder))?;
            let table = match &input {
                Some(p) => load_csv(p, Some(synth.schema()), Origin::Real)
                    .map_err(|e| e.at(Stage::Dataset))?,
                None => synth,
            };
            let matrix = encode_for(&model, &table, metric).map_err(|e| e.at(Stage::Encoder))?;
            let names = match metric {
                Metric::Euclidean => model.dimension_names(),
                Metric::Gower => model.schema().names(),
            };
            match out {
                Some(path) => {
                    let f = File::create(&path)
                        .with_context(|| format!("creating {}", path.display()))?;
                    write_encoded_csv(&matrix, &names, BufWriter::new(f))?;
                }
                None => write_encoded_csv(&matrix, &names, io::stdout().lock())?,
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn print_report(r: &LeakageReport) {
    let mut out = io::stdout().lock();
    let m = &r.metadata;
    let _ = writeln!(
        out,
        "{} / {}: M={} K={} noise={} eps={:.6} dim={}",
        m.dataset, m.generator, m.n_synthetic, r.k, r.noise, m.clustering.eps, m.encoded_dim
    );
    if let Some(ev) = &r.evaluation {
        for read in &ev.reference {
            let _ = writeln!(
                out,
                "  tau={}: ASR={:.4} Cov={:.4}",
                read.tau, read.asr, read.coverage
            );
        }
        let _ = writeln!(
            out,
            "  d_min: {}",
            cmla_core::report::render_summary_row(&ev.dmin)
        );
    }
}
