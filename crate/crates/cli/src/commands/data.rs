//! `ingest` and `synth`: produce canonical corpus files plus their stats.

use std::collections::BTreeMap;
use std::path::PathBuf;

use anyhow::{Context, Result};
use namefair_core::corpus::{
    generate_synthetic_corpus, ingest_csv, normalize_name, DatasetStats, IngestOptions,
    SyntheticSpec,
};
use serde::Serialize;

use crate::config::{column_map, RunConfig};
use crate::files;

#[derive(Debug, clap::Args)]
pub struct IngestArgs {
    /// Source CSV file.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Column mapping overrides, FIELD=COLUMN (repeatable).
    #[arg(long = "map")]
    pub map: Vec<String>,
    /// Abort when malformed rows exceed this fraction.
    #[arg(long)]
    pub max_malformed: Option<f64>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Serialize)]
struct IngestStats {
    total_rows: usize,
    records: usize,
    dropped_invalid: usize,
    malformed: usize,
    #[serde(flatten)]
    names: DatasetStats,
}

pub fn cmd_ingest(args: IngestArgs) -> Result<()> {
    let config = RunConfig::load_opt(args.config.as_ref())?;
    let input = args
        .input
        .or(config.dataset.path.clone())
        .context("no input file: pass --input or set [dataset].path")?;
    let out = args
        .out
        .or(config.out.clone())
        .context("no output directory: pass --out")?;
    let map = column_map(config.dataset.columns.as_ref(), &args.map)?;
    let options = IngestOptions {
        max_malformed_fraction: args
            .max_malformed
            .or(config.dataset.max_malformed_fraction)
            .unwrap_or(IngestOptions::default().max_malformed_fraction),
    };

    let report = ingest_csv(&input, &map, &options)?;

    // outputs only exist once ingestion has fully succeeded
    files::ensure_out_dir(&out)?;
    let mut log = files::RunLog::create(&out)?;
    log.line(format!("ingest {}", input.display()));

    let mut records = report.records;
    for record in &mut records {
        record.raw_name = normalize_name(&record.raw_name);
    }
    let mut unique: Vec<&str> = records.iter().map(|r| r.raw_name.as_str()).collect();
    unique.sort_unstable();
    unique.dedup();

    files::write_corpus_csv(&out.join("corpus.csv"), &records)?;
    let stats = IngestStats {
        total_rows: report.total_rows,
        records: records.len(),
        dropped_invalid: report.dropped_invalid,
        malformed: report.malformed,
        names: DatasetStats::new(records.len() as u64, unique.len() as u64),
    };
    files::write_json(&out.join("stats.json"), &stats)?;

    let mut effective = BTreeMap::new();
    effective.insert("command".into(), "ingest".into());
    effective.insert("input".into(), input.display().to_string());
    effective.insert(
        "max_malformed_fraction".into(),
        options.max_malformed_fraction.to_string(),
    );
    files::write_effective_config(&out, &effective)?;

    log.line(format!(
        "rows {} records {} dropped {} malformed {} unique {}",
        stats.total_rows, stats.records, stats.dropped_invalid, stats.malformed, stats.names.unique
    ));
    for (row, reason) in &report.malformed_examples {
        log.line(format!("malformed row {row}: {reason}"));
    }
    println!("{}", stats.names);
    Ok(())
}

#[derive(Debug, clap::Args)]
pub struct SynthArgs {
    /// Generator parameters, JSON.
    #[arg(long)]
    pub spec: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Serialize)]
struct BayesSummary {
    seed: u64,
    count: usize,
    bayes_accuracy: f64,
}

pub fn cmd_synth(args: SynthArgs) -> Result<()> {
    let config = RunConfig::load_opt(args.config.as_ref())?;
    let out = args
        .out
        .or(config.out.clone())
        .context("no output directory: pass --out")?;
    let seed = args.seed.or(config.seed).unwrap_or(0);
    let text = std::fs::read_to_string(&args.spec)
        .with_context(|| format!("read spec {}", args.spec.display()))?;
    let spec: SyntheticSpec =
        serde_json::from_str(&text).context("parse synthetic corpus spec")?;

    let corpus = generate_synthetic_corpus(&spec, seed)?;

    files::ensure_out_dir(&out)?;
    let mut log = files::RunLog::create(&out)?;
    files::write_corpus_csv(&out.join("corpus.csv"), &corpus.records)?;
    files::write_json(
        &out.join("bayes.json"),
        &BayesSummary {
            seed,
            count: corpus.records.len(),
            bayes_accuracy: corpus.bayes_accuracy,
        },
    )?;

    let mut effective = BTreeMap::new();
    effective.insert("command".into(), "synth".into());
    effective.insert("spec".into(), args.spec.display().to_string());
    effective.insert("seed".into(), seed.to_string());
    effective.insert("task".into(), spec.task.name().into());
    files::write_effective_config(&out, &effective)?;

    log.line(format!(
        "generated {} records, bayes accuracy {:.4}",
        corpus.records.len(),
        corpus.bayes_accuracy
    ));
    println!(
        "generated {} records | Bayes-optimal accuracy {:.4}",
        corpus.records.len(),
        corpus.bayes_accuracy
    );
    Ok(())
}
