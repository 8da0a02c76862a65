//! `audit`: the research-question reports over a labeled or
//! model-predicted corpus.

use std::collections::BTreeMap;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use namefair_core::corpus::{ingest_csv, normalize_name, IngestOptions, NameRecord, Task};
use namefair_core::fairness::{
    percentile_report, representation_report, state_share_report, state_trend_report,
    voice_report, CensusTable, FairnessReport, LikelihoodBasis, PeriodKind, SeriesMode,
};
use namefair_core::models::{load_model, ModelArtifact};

use crate::config::RunConfig;
use crate::files;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Question {
    Rq1,
    Rq2,
    Rq3,
    Rq4,
    Arq1,
    Arq2,
}

impl Question {
    fn tag(self) -> &'static str {
        match self {
            Question::Rq1 => "RQ1",
            Question::Rq2 => "RQ2",
            Question::Rq3 => "RQ3",
            Question::Rq4 => "RQ4",
            Question::Arq1 => "ARQ1",
            Question::Arq2 => "ARQ2",
        }
    }
}

#[derive(Debug, clap::Args)]
pub struct AuditArgs {
    #[arg(long, value_enum)]
    pub question: Question,
    /// Canonical corpus CSV.
    #[arg(long)]
    pub corpus: PathBuf,
    /// Census CSV (state,total,female,reserved) for ARQ1/ARQ2.
    #[arg(long)]
    pub census: Option<PathBuf>,
    /// Fill missing gender labels with this model's predictions.
    #[arg(long)]
    pub gender_model: Option<PathBuf>,
    /// Fill missing caste labels with this model's predictions.
    #[arg(long)]
    pub caste_model: Option<PathBuf>,
    /// Report monthly series cumulatively.
    #[arg(long)]
    pub cumulative: bool,
    /// Compute the message-likelihood ratio from post counts instead of
    /// voice.
    #[arg(long)]
    pub post_count_basis: bool,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn apply_model(
    records: &mut [NameRecord],
    artifact: &ModelArtifact,
    task: Task,
) -> Result<usize> {
    if artifact.task != task {
        bail!(
            "model predicts {}, wanted {}",
            artifact.task.name(),
            task.name()
        );
    }
    let mut filled = 0;
    for record in records.iter_mut() {
        if record.label(task).is_some() {
            continue;
        }
        let prediction = artifact.predict(&normalize_name(&record.raw_name));
        record.set_label(task, prediction.label);
        filled += 1;
    }
    Ok(filled)
}

pub fn cmd_audit(args: AuditArgs) -> Result<()> {
    let config = RunConfig::load_opt(args.config.as_ref())?;
    let out = args
        .out
        .or(config.out.clone())
        .context("no output directory: pass --out")?;
    let cumulative = args.cumulative || config.audit.cumulative.unwrap_or(false);
    let basis = if args.post_count_basis || config.audit.post_count_basis.unwrap_or(false) {
        LikelihoodBasis::PostCount
    } else {
        LikelihoodBasis::Voice
    };

    let ingest = ingest_csv(&args.corpus, &Default::default(), &IngestOptions::default())?;
    let mut records = ingest.records;

    let mut provenance_parts: Vec<String> = Vec::new();
    for (task, model_path) in [
        (Task::Gender, &args.gender_model),
        (Task::Caste, &args.caste_model),
    ] {
        if let Some(path) = model_path {
            let artifact = load_model(path)?;
            let filled = apply_model(&mut records, &artifact, task)?;
            provenance_parts.push(format!(
                "{}=model:{} ({} filled)",
                task.name(),
                artifact.family.name(),
                filled
            ));
        }
    }
    if provenance_parts.is_empty() {
        provenance_parts.push("gold".into());
    }
    let provenance = config
        .audit
        .provenance
        .clone()
        .unwrap_or_else(|| provenance_parts.join(","));

    let question = args.question;
    let mode = if cumulative {
        SeriesMode::Cumulative
    } else {
        SeriesMode::PerPeriod
    };
    let load_census = || -> Result<CensusTable> {
        let path = args
            .census
            .clone()
            .or(config.census.path.clone())
            .context("this question needs --census")?;
        Ok(CensusTable::load_csv(&path)?)
    };

    let report: FairnessReport = match question {
        Question::Rq1 | Question::Rq2 => {
            let mut report = representation_report(
                question.tag(),
                &records,
                PeriodKind::Year,
                mode,
                &provenance,
            )?;
            // entrance-exam corpora carry ranks; attach the percentile table
            let rankable = !records.is_empty()
                && records.iter().all(|r| r.rank.is_some() && r.year.is_some());
            if rankable {
                let percentiles = percentile_report(question.tag(), &records, &provenance)?;
                report.tables.extend(percentiles.tables);
            }
            report
        }
        Question::Rq3 => representation_report(
            question.tag(),
            &records,
            PeriodKind::Month,
            mode,
            &provenance,
        )?,
        Question::Rq4 => voice_report(question.tag(), &records, basis, &provenance)?,
        Question::Arq1 => state_share_report(question.tag(), &records, &load_census()?, &provenance)?,
        Question::Arq2 => state_trend_report(question.tag(), &records, &load_census()?, &provenance)?,
    };

    files::ensure_out_dir(&out)?;
    let mut log = files::RunLog::create(&out)?;
    let written = report.write_files(&out)?;
    for path in &written {
        log.line(format!("wrote {}", path.display()));
    }

    let mut effective = BTreeMap::new();
    effective.insert("command".into(), "audit".into());
    effective.insert("question".into(), question.tag().into());
    effective.insert("corpus".into(), args.corpus.display().to_string());
    effective.insert("provenance".into(), provenance);
    effective.insert("cumulative".into(), cumulative.to_string());
    effective.insert(
        "likelihood_basis".into(),
        format!("{basis:?}").to_lowercase(),
    );
    files::write_effective_config(&out, &effective)?;

    println!(
        "{}: wrote {} files to {}",
        question.tag(),
        written.len() + 1,
        out.display()
    );
    Ok(())
}
