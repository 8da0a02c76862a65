//! `predict`, `eval`, `cross-eval` and `buckets`: run models, score
//! prediction sets, and compare two sources error by error.

use std::collections::BTreeMap;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use namefair_core::corpus::{normalize_name, ColumnMap, IngestOptions};
use namefair_core::eval::{cross_evaluate, error_buckets, evaluate, EvalReport, UnknownPolicy};
use namefair_core::models::{
    import_api_predictions, import_predictions, load_model, PredictionSet,
};
use serde::Serialize;

use crate::config::RunConfig;
use crate::files;

#[derive(Debug, clap::Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// One name on the command line...
    #[arg(long)]
    pub name: Option<String>,
    /// ...or a CSV of names (column `name`).
    #[arg(long)]
    pub names: Option<PathBuf>,
    /// State code appended when the model was trained with the state
    /// feature.
    #[arg(long)]
    pub state: Option<String>,
    /// Output CSV for --names runs.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Serialize)]
struct PredictOutput {
    name: String,
    input: String,
    label: String,
    probability: f64,
    fallback: bool,
}

pub fn cmd_predict(args: PredictArgs) -> Result<()> {
    let artifact = load_model(&args.model)?;
    let prepare = |raw: &str| -> Result<String> {
        let normalized = normalize_name(raw);
        if artifact.state_feature {
            let state = args.state.as_deref().with_context(|| {
                "model was trained with the state feature; pass --state".to_string()
            })?;
            Ok(files::with_state_input(&normalized, &normalize_name(state)))
        } else {
            Ok(normalized)
        }
    };

    match (&args.name, &args.names) {
        (Some(raw), None) => {
            let input = prepare(raw)?;
            let prediction = artifact.predict(&input);
            let output = PredictOutput {
                name: raw.clone(),
                input,
                label: artifact.task.label_name(prediction.label).to_string(),
                probability: prediction.probability,
                fallback: prediction.fallback,
            };
            println!("{}", serde_json::to_string_pretty(&output)?);
            Ok(())
        }
        (None, Some(list_path)) => {
            let out = args
                .out
                .clone()
                .context("--names runs need --out FILE for the prediction CSV")?;
            let report = namefair_core::corpus::ingest_csv(
                list_path,
                &ColumnMap::name_only("name"),
                &IngestOptions::default(),
            )?;
            let mut writer = csv::Writer::from_path(&out)
                .with_context(|| format!("create {}", out.display()))?;
            writer.write_record(["name", "label", "probability"])?;
            for record in &report.records {
                let input = prepare(&record.raw_name)?;
                let prediction = artifact.predict(&input);
                writer.write_record([
                    normalize_name(&record.raw_name),
                    artifact.task.label_name(prediction.label).to_string(),
                    format!("{}", prediction.probability),
                ])?;
            }
            writer.flush()?;
            println!(
                "wrote {} predictions to {}",
                report.records.len(),
                out.display()
            );
            Ok(())
        }
        _ => bail!("pass exactly one of --name or --names"),
    }
}

#[derive(Debug, clap::Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Labeled test split (`name,label[,support]`).
    #[arg(long)]
    pub test: PathBuf,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn cmd_eval(args: EvalArgs) -> Result<()> {
    let config = RunConfig::load_opt(args.config.as_ref())?;
    let out = args
        .out
        .or(config.out.clone())
        .context("no output directory: pass --out")?;
    let artifact = load_model(&args.model)?;
    let gold = files::read_labeled_csv(&args.test, artifact.task)?;
    let preds = artifact.predictions_for(&gold);
    let report = evaluate(&preds, &gold, UnknownPolicy::CountWrong)?;

    files::ensure_out_dir(&out)?;
    let mut log = files::RunLog::create(&out)?;
    files::write_json(&out.join("eval.json"), &report)?;
    std::fs::write(out.join("eval.txt"), files::eval_table(&report))?;

    let mut effective = BTreeMap::new();
    effective.insert("command".into(), "eval".into());
    effective.insert("model".into(), args.model.display().to_string());
    effective.insert("test".into(), args.test.display().to_string());
    files::write_effective_config(&out, &effective)?;

    log.line(format!(
        "accuracy {:.4} macro f1 {:.4} over {}",
        report.accuracy, report.macro_f1, report.n
    ));
    println!("{}", files::eval_table(&report));
    Ok(())
}

#[derive(Debug, clap::Args)]
pub struct CrossEvalArgs {
    /// Trained model, TAG=PATH (repeatable).
    #[arg(long = "model", required = true)]
    pub models: Vec<String>,
    /// Labeled test split, TAG=PATH (repeatable).
    #[arg(long = "test", required = true)]
    pub tests: Vec<String>,
    #[arg(long)]
    pub task: Option<String>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn cmd_cross_eval(args: CrossEvalArgs) -> Result<()> {
    let config = RunConfig::load_opt(args.config.as_ref())?;
    let out = args
        .out
        .or(config.out.clone())
        .context("no output directory: pass --out")?;
    let task = super::parse_task(args.task.as_deref(), config.task.as_deref())?;

    let models: Vec<(String, PathBuf)> = args
        .models
        .iter()
        .map(|raw| files::parse_tagged(raw))
        .collect::<Result<_>>()?;
    let tests: Vec<(String, PathBuf)> = args
        .tests
        .iter()
        .map(|raw| files::parse_tagged(raw))
        .collect::<Result<_>>()?;

    files::ensure_out_dir(&out)?;
    let mut log = files::RunLog::create(&out)?;

    let mut matrix = csv::Writer::from_path(out.join("cross_eval_matrix.csv"))?;
    matrix.write_record(["train", "test", "accuracy", "macro_f1", "n"])?;
    let mut reports: Vec<EvalReport> = Vec::new();
    for (model_tag, model_path) in &models {
        let artifact = load_model(model_path)?;
        for (test_tag, test_path) in &tests {
            let gold = files::read_labeled_csv(test_path, task)?;
            let report = cross_evaluate(&artifact, &gold, task, model_tag, test_tag)?;
            log.line(format!(
                "{model_tag} x {test_tag}: accuracy {:.4} macro f1 {:.4}",
                report.accuracy, report.macro_f1
            ));
            matrix.write_record([
                model_tag.clone(),
                test_tag.clone(),
                format!("{:.4}", report.accuracy),
                format!("{:.4}", report.macro_f1),
                report.n.to_string(),
            ])?;
            files::write_json(
                &out.join(format!("cross_{model_tag}_{test_tag}.json")),
                &report,
            )?;
            reports.push(report);
        }
    }
    matrix.flush()?;

    let mut effective = BTreeMap::new();
    effective.insert("command".into(), "cross-eval".into());
    effective.insert("task".into(), task.name().into());
    effective.insert("models".into(), args.models.join(","));
    effective.insert("tests".into(), args.tests.join(","));
    files::write_effective_config(&out, &effective)?;

    println!(
        "wrote {} cross-evaluation reports to {}",
        reports.len(),
        out.display()
    );
    Ok(())
}

#[derive(Debug, clap::Args)]
pub struct BucketsArgs {
    /// Gold labels (`name,label[,support]`).
    #[arg(long)]
    pub gold: PathBuf,
    /// First prediction source, TAG=PATH.
    #[arg(long)]
    pub preds_a: String,
    /// Second prediction source, TAG=PATH.
    #[arg(long)]
    pub preds_b: String,
    #[arg(long)]
    pub task: Option<String>,
    /// Accept "Unknown" labels (API exports) as abstentions.
    #[arg(long)]
    pub allow_unknown: bool,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Serialize)]
struct BucketSummary {
    source_a: String,
    source_b: String,
    cc: usize,
    cw: usize,
    wc: usize,
    ww: usize,
    total: usize,
}

pub fn cmd_buckets(args: BucketsArgs) -> Result<()> {
    let config = RunConfig::load_opt(args.config.as_ref())?;
    let out = args
        .out
        .or(config.out.clone())
        .context("no output directory: pass --out")?;
    let task = super::parse_task(args.task.as_deref(), config.task.as_deref())?;
    let (tag_a, path_a) = files::parse_tagged(&args.preds_a)?;
    let (tag_b, path_b) = files::parse_tagged(&args.preds_b)?;

    let import = |path: &PathBuf| -> Result<PredictionSet> {
        let set = if args.allow_unknown {
            import_api_predictions(path, task)?
        } else {
            import_predictions(path, task)?
        };
        Ok(set)
    };
    let preds_a = import(&path_a)?;
    let preds_b = import(&path_b)?;
    let gold = files::read_labeled_csv(&args.gold, task)?;
    let buckets = error_buckets(&preds_a, &preds_b, &gold)?;

    files::ensure_out_dir(&out)?;
    let mut log = files::RunLog::create(&out)?;

    let mut writer = csv::Writer::from_path(out.join("buckets.csv"))?;
    writer.write_record(["bucket", "name", "gold", &tag_a, &tag_b])?;
    let label = |c: Option<namefair_core::corpus::ClassId>| -> String {
        c.map(|c| task.label_name(c).to_string())
            .unwrap_or_else(|| "Unknown".into())
    };
    for (bucket, entries) in [
        ("CC", &buckets.cc),
        ("CW", &buckets.cw),
        ("WC", &buckets.wc),
        ("WW", &buckets.ww),
    ] {
        for entry in entries {
            writer.write_record([
                bucket.to_string(),
                entry.name.clone(),
                task.label_name(entry.gold).to_string(),
                label(entry.pred_a),
                label(entry.pred_b),
            ])?;
        }
    }
    writer.flush()?;

    let summary = BucketSummary {
        source_a: tag_a,
        source_b: tag_b,
        cc: buckets.cc.len(),
        cw: buckets.cw.len(),
        wc: buckets.wc.len(),
        ww: buckets.ww.len(),
        total: buckets.total(),
    };
    files::write_json(&out.join("buckets_summary.json"), &summary)?;

    let mut effective = BTreeMap::new();
    effective.insert("command".into(), "buckets".into());
    effective.insert("task".into(), task.name().into());
    effective.insert("gold".into(), args.gold.display().to_string());
    effective.insert("preds_a".into(), args.preds_a.clone());
    effective.insert("preds_b".into(), args.preds_b.clone());
    effective.insert("allow_unknown".into(), args.allow_unknown.to_string());
    files::write_effective_config(&out, &effective)?;

    log.line(format!(
        "buckets cc {} cw {} wc {} ww {}",
        summary.cc, summary.cw, summary.wc, summary.ww
    ));
    println!(
        "CC {} | CW {} | WC {} | WW {} (of {})",
        summary.cc, summary.cw, summary.wc, summary.ww, summary.total
    );
    Ok(())
}
