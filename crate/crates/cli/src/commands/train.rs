//! `train`: dedup, split, fit features and train one model family,
//! producing a self-contained artifact plus the split files.

use std::collections::BTreeMap;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use namefair_core::corpus::{deduplicate, ingest_csv, split, ClassId, IngestOptions, LabeledName};
use namefair_core::features::{fit_ngram_index, CharVocabulary};
use namefair_core::models::charcnn::CharModelOptions;
use namefair_core::models::{
    save_model, train_charcnn, train_charlstm, train_logreg, ModelArtifact, ModelFamily,
    TrainConfig, TrainMetrics,
};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::RunConfig;
use crate::files;

#[derive(Debug, clap::Args)]
pub struct TrainArgs {
    /// Canonical corpus CSV (ingest or synth output).
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    #[arg(long)]
    pub task: Option<String>,
    /// logreg, charcnn or charlstm.
    #[arg(long)]
    pub family: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Train fraction of the unique-name split.
    #[arg(long)]
    pub ratio: Option<f64>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub embed_dim: Option<usize>,
    #[arg(long)]
    pub max_len: Option<usize>,
    #[arg(long)]
    pub ngram_min: Option<usize>,
    #[arg(long)]
    pub ngram_max: Option<usize>,
    #[arg(long)]
    pub min_df: Option<u32>,
    /// Down-sample the majority class in the training split.
    #[arg(long)]
    pub balance: bool,
    /// Weight examples by inverse class frequency instead.
    #[arg(long)]
    pub class_weighting: bool,
    /// Append the state code to every input string.
    #[arg(long)]
    pub with_state: bool,
    #[arg(long)]
    pub patience: Option<usize>,
    #[arg(long)]
    pub validation_fraction: Option<f64>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Serialize)]
struct TrainSummary {
    family: String,
    task: String,
    train_size: usize,
    test_size: usize,
    unique_names: usize,
    balanced: bool,
    with_state: bool,
    metrics: TrainMetrics,
}

fn downsample_majority(train: &mut Vec<LabeledName>, seed: u64) {
    let count = |items: &[LabeledName], c: u8| {
        items.iter().filter(|l| l.label == ClassId(c)).count()
    };
    let (n0, n1) = (count(train, 0), count(train, 1));
    if n0 == n1 {
        return;
    }
    let (majority, keep) = if n0 > n1 { (0u8, n1) } else { (1u8, n0) };
    let mut majority_items: Vec<LabeledName> = train
        .iter()
        .filter(|l| l.label == ClassId(majority))
        .cloned()
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xba1a_ce5e_ed00_0005);
    majority_items.shuffle(&mut rng);
    majority_items.truncate(keep);
    let mut rest: Vec<LabeledName> = train
        .iter()
        .filter(|l| l.label != ClassId(majority))
        .cloned()
        .collect();
    rest.extend(majority_items);
    rest.sort_by(|a, b| a.name.cmp(&b.name));
    *train = rest;
}

pub fn cmd_train(args: TrainArgs) -> Result<()> {
    let config = RunConfig::load_opt(args.config.as_ref())?;
    let corpus_path = args
        .corpus
        .or(config.dataset.path.clone())
        .context("no corpus file: pass --corpus")?;
    let out = args
        .out
        .or(config.out.clone())
        .context("no output directory: pass --out")?;
    let task = super::parse_task(args.task.as_deref(), config.task.as_deref())?;
    let family: ModelFamily = args
        .family
        .as_deref()
        .or(config.train.family.as_deref())
        .unwrap_or("logreg")
        .parse()?;
    let seed = args.seed.or(config.seed).unwrap_or(0);
    let ratio = args.ratio.or(config.train.ratio).unwrap_or(0.7);
    let with_state = args.with_state || config.train.with_state.unwrap_or(false);
    let balance = args.balance || config.train.balance.unwrap_or(false);

    let mut train_config = match family {
        ModelFamily::Logreg => TrainConfig::logreg(seed),
        _ => TrainConfig::char_model(seed),
    };
    if let Some(v) = args.learning_rate.or(config.train.learning_rate) {
        train_config.learning_rate = v;
    }
    if let Some(v) = args.epochs.or(config.train.epochs) {
        train_config.epochs = v;
    }
    if let Some(v) = args.batch_size.or(config.train.batch_size) {
        train_config.batch_size = v;
    }
    if let Some(v) = args.patience.or(config.train.patience) {
        train_config.early_stop_patience = v;
    }
    if let Some(v) = args.validation_fraction.or(config.train.validation_fraction) {
        train_config.validation_fraction = v;
    }
    train_config.class_weighting =
        args.class_weighting || config.train.class_weighting.unwrap_or(false);

    let char_options = CharModelOptions {
        max_len: args.max_len.or(config.train.max_len).unwrap_or(CharModelOptions::default().max_len),
        embed_dim: args
            .embed_dim
            .or(config.train.embed_dim)
            .unwrap_or(CharModelOptions::default().embed_dim),
    };
    let ngram_min = args.ngram_min.or(config.train.ngram_min).unwrap_or(1);
    let ngram_max = args.ngram_max.or(config.train.ngram_max).unwrap_or(6);
    let min_df = args.min_df.or(config.train.min_df).unwrap_or(2);

    // canonical corpus files read back with the identity mapping
    let ingest = ingest_csv(&corpus_path, &Default::default(), &IngestOptions::default())?;
    let mut records = ingest.records;
    if with_state {
        let before = records.len();
        records.retain(|r| r.state.is_some());
        if records.is_empty() {
            bail!("--with-state set but no record carries a state code");
        }
        for record in &mut records {
            let state = record.state.clone().expect("filtered above");
            record.raw_name = files::with_state_input(&record.raw_name, &state);
        }
        if before != records.len() {
            eprintln!(
                "note: dropped {} records without state codes",
                before - records.len()
            );
        }
    }

    let labeled = deduplicate(&records, task)?;
    let pair = split(&labeled, ratio, seed)?;
    let mut train_side = pair.train;
    if balance {
        downsample_majority(&mut train_side, seed);
    }

    files::ensure_out_dir(&out)?;
    let mut log = files::RunLog::create(&out)?;
    log.line(format!(
        "training {} on {} unique names ({} train / {} test)",
        family.name(),
        labeled.len(),
        train_side.len(),
        pair.test.len()
    ));

    let train_names: Vec<&str> = train_side.iter().map(|l| l.name.as_str()).collect();
    let artifact: ModelArtifact = match family {
        ModelFamily::Logreg => {
            let index = fit_ngram_index(&train_names, ngram_min, ngram_max, min_df)?;
            log.line(format!("n-gram index: {} columns", index.dimension()));
            train_logreg(&train_side, &index, &train_config)?
                .into_artifact(task, &train_config, with_state)
        }
        ModelFamily::CharCnn => {
            let vocab = CharVocabulary::fit(&train_names);
            train_charcnn(&train_side, &vocab, &train_config, &char_options)?
                .into_artifact(task, &train_config, with_state)
        }
        ModelFamily::CharLstm => {
            let vocab = CharVocabulary::fit(&train_names);
            train_charlstm(&train_side, &vocab, &train_config, &char_options)?
                .into_artifact(task, &train_config, with_state)
        }
    };

    for epoch in &artifact.metrics.epoch_losses {
        log.line(format!(
            "epoch {} train loss {:.6} val loss {:.6}",
            epoch.epoch, epoch.train_loss, epoch.val_loss
        ));
    }

    save_model(&artifact, &out.join("model.bin"))?;
    files::write_labeled_csv(&out.join("train.csv"), task, &train_side)?;
    files::write_labeled_csv(&out.join("test.csv"), task, &pair.test)?;
    files::write_json(
        &out.join("metrics.json"),
        &TrainSummary {
            family: family.name().into(),
            task: task.name().into(),
            train_size: train_side.len(),
            test_size: pair.test.len(),
            unique_names: labeled.len(),
            balanced: balance,
            with_state,
            metrics: artifact.metrics.clone(),
        },
    )?;

    let mut effective = BTreeMap::new();
    effective.insert("command".into(), "train".into());
    effective.insert("corpus".into(), corpus_path.display().to_string());
    effective.insert("task".into(), task.name().into());
    effective.insert("family".into(), family.name().into());
    effective.insert("seed".into(), seed.to_string());
    effective.insert("ratio".into(), ratio.to_string());
    effective.insert("learning_rate".into(), train_config.learning_rate.to_string());
    effective.insert("epochs".into(), train_config.epochs.to_string());
    effective.insert("batch_size".into(), train_config.batch_size.to_string());
    effective.insert("patience".into(), train_config.early_stop_patience.to_string());
    effective.insert(
        "validation_fraction".into(),
        train_config.validation_fraction.to_string(),
    );
    effective.insert("class_weighting".into(), train_config.class_weighting.to_string());
    effective.insert("balance".into(), balance.to_string());
    effective.insert("with_state".into(), with_state.to_string());
    match family {
        ModelFamily::Logreg => {
            effective.insert("ngram_min".into(), ngram_min.to_string());
            effective.insert("ngram_max".into(), ngram_max.to_string());
            effective.insert("min_df".into(), min_df.to_string());
        }
        _ => {
            effective.insert("embed_dim".into(), char_options.embed_dim.to_string());
            effective.insert("max_len".into(), char_options.max_len.to_string());
        }
    }
    files::write_effective_config(&out, &effective)?;

    log.line("saved model.bin, train.csv, test.csv, metrics.json");
    println!(
        "trained {} | best epoch {} | final val loss {:.6}",
        family.name(),
        artifact.metrics.best_epoch,
        artifact.metrics.final_val_loss
    );
    Ok(())
}
