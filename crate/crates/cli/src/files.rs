//! Canonical file formats shared by the subcommands: corpus CSV, labeled
//! split CSV, JSON reports, and the sidecar run log.

use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use namefair_core::corpus::{Gender, LabeledName, NameRecord, Task};

pub const CORPUS_COLUMNS: [&str; 9] = [
    "name",
    "gender",
    "caste",
    "year",
    "state",
    "rank",
    "followers",
    "posts",
    "created_at",
];

fn opt<T: ToString>(value: &Option<T>) -> String {
    value.as_ref().map(T::to_string).unwrap_or_default()
}

/// Writes records in the canonical corpus schema, one row per record, in
/// input order.
pub fn write_corpus_csv(path: &Path, records: &[NameRecord]) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)
        .with_context(|| format!("create {}", path.display()))?;
    writer.write_record(CORPUS_COLUMNS)?;
    for record in records {
        writer.write_record([
            record.raw_name.clone(),
            opt(&record.gender.map(|g| if g == Gender::Female { "Female" } else { "Male" })),
            opt(&record.caste.map(|c| {
                if c == namefair_core::corpus::Caste::Reserved {
                    "Reserved"
                } else {
                    "General"
                }
            })),
            opt(&record.year),
            opt(&record.state),
            opt(&record.rank),
            opt(&record.followers),
            opt(&record.posts),
            opt(&record.created_at),
        ])?;
    }
    writer.flush()?;
    Ok(())
}

/// Writes a unique-name split side as `name,label,support`.
pub fn write_labeled_csv(path: &Path, task: Task, items: &[LabeledName]) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)
        .with_context(|| format!("create {}", path.display()))?;
    writer.write_record(["name", "label", "support"])?;
    for item in items {
        writer.write_record([
            item.name.clone(),
            task.label_name(item.label).to_string(),
            item.support.to_string(),
        ])?;
    }
    writer.flush()?;
    Ok(())
}

/// Reads a `name,label[,support]` file back into labeled names.
pub fn read_labeled_csv(path: &Path, task: Task) -> Result<Vec<LabeledName>> {
    let mut reader = csv::Reader::from_path(path)
        .with_context(|| format!("open {}", path.display()))?;
    let headers = reader.headers()?.clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let c_name = col("name").context("labeled file needs a 'name' column")?;
    let c_label = col("label").context("labeled file needs a 'label' column")?;
    let c_support = col("support");

    let mut items = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let row = row?;
        let name = row.get(c_name).unwrap_or("").to_string();
        let label_text = row.get(c_label).unwrap_or("");
        let label = task
            .parse_label(label_text)
            .with_context(|| format!("row {i}: unknown {} label {label_text:?}", task.name()))?;
        let support: u32 = c_support
            .and_then(|c| row.get(c))
            .filter(|s| !s.is_empty())
            .map(str::parse)
            .transpose()
            .with_context(|| format!("row {i}: bad support"))?
            .unwrap_or(1);
        let mut votes = [0u32; 2];
        votes[label.index()] = support;
        items.push(LabeledName {
            name,
            label,
            support,
            label_votes: votes,
        });
    }
    Ok(items)
}

pub fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text + "\n").with_context(|| format!("write {}", path.display()))?;
    Ok(())
}

/// Echoes the resolved settings of a run as sorted TOML for provenance.
pub fn write_effective_config(
    dir: &Path,
    settings: &std::collections::BTreeMap<String, String>,
) -> Result<()> {
    let path = dir.join("config.toml");
    let text = toml::to_string(settings)?;
    std::fs::write(&path, text).with_context(|| format!("write {}", path.display()))?;
    Ok(())
}

/// Timestamped sidecar log; the only place wall-clock time is written.
pub struct RunLog {
    file: std::fs::File,
}

impl RunLog {
    pub fn create(dir: &Path) -> Result<RunLog> {
        let path = dir.join("log.txt");
        let file = std::fs::File::create(&path)
            .with_context(|| format!("create {}", path.display()))?;
        Ok(RunLog { file })
    }

    pub fn line(&mut self, message: impl AsRef<str>) {
        let epoch = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        let _ = writeln!(self.file, "[t={epoch}] {}", message.as_ref());
    }
}

pub fn ensure_out_dir(out: &Path) -> Result<PathBuf> {
    std::fs::create_dir_all(out).with_context(|| format!("create {}", out.display()))?;
    Ok(out.to_path_buf())
}

/// "tag=path" arguments for the matrix-style commands.
pub fn parse_tagged(raw: &str) -> Result<(String, PathBuf)> {
    let (tag, path) = raw
        .split_once('=')
        .context("expected TAG=PATH")?;
    anyhow::ensure!(!tag.is_empty(), "empty tag in {raw:?}");
    Ok((tag.to_string(), PathBuf::from(path)))
}

/// Human-readable evaluation table.
pub fn eval_table(report: &namefair_core::eval::EvalReport) -> String {
    let labels = report.task.labels();
    let mut out = String::new();
    out.push_str(&format!(
        "source: {}\nn: {}  skipped: {}  unmatched: {}\n",
        report.source, report.n, report.skipped, report.unmatched_predictions
    ));
    if let (Some(train), Some(test)) = (&report.train_source, &report.test_source) {
        out.push_str(&format!("train: {train}  test: {test}\n"));
    }
    out.push_str(&format!(
        "accuracy: {:.4}  macro F1: {:.4}\n\n",
        report.accuracy, report.macro_f1
    ));
    out.push_str("class      precision  recall   f1       support\n");
    for (c, label) in labels.iter().enumerate() {
        let m = report.per_class[c];
        out.push_str(&format!(
            "{label:<10} {:<10.4} {:<8.4} {:<8.4} {}\n",
            m.precision, m.recall, m.f1, m.support
        ));
    }
    out.push_str("\nconfusion (rows gold, cols predicted):\n");
    out.push_str(&format!(
        "            {:<10} {:<10}\n",
        labels[0], labels[1]
    ));
    for (g, label) in labels.iter().enumerate() {
        out.push_str(&format!(
            "{label:<10}  {:<10} {:<10}\n",
            report.confusion[g][0], report.confusion[g][1]
        ));
    }
    out
}

/// Input string for the name-plus-state variant: the separator survives
/// normalization, so the whole pipeline treats the pair as one string.
pub fn with_state_input(name: &str, state: &str) -> String {
    format!("{name} - {state}")
}
