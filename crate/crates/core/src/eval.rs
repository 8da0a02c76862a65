//! Scoring: accuracy / macro-F1 reports, cross-dataset protocol, error
//! buckets between two prediction sources, and seeded holdout sampling.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{ClassId, LabeledName, Task};
use crate::error::{Error, Result};
use crate::models::{ModelArtifact, PredictionSet};

/// How predictions without a label (API "Unknown" responses) are scored.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UnknownPolicy {
    /// The strict reading: an abstention is a wrong prediction.
    #[default]
    CountWrong,
    /// Drop abstentions from the evaluation set.
    Exclude,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub task: Task,
    pub source: String,
    pub accuracy: f64,
    pub macro_f1: f64,
    pub per_class: [ClassMetrics; 2],
    /// Rows are gold classes, columns predicted classes.
    pub confusion: [[u64; 2]; 2],
    /// Evaluated pairs.
    pub n: u64,
    /// Gold names without a usable prediction.
    pub skipped: u64,
    /// Prediction rows that matched no gold name.
    pub unmatched_predictions: u64,
    /// Abstentions scored as wrong under [`UnknownPolicy::CountWrong`].
    pub unknown_as_wrong: u64,
    pub train_source: Option<String>,
    pub test_source: Option<String>,
}

fn zero_div(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

fn report_from_confusion(
    task: Task,
    source: String,
    confusion: [[u64; 2]; 2],
    skipped: u64,
    unmatched_predictions: u64,
    unknown_as_wrong: u64,
) -> EvalReport {
    let n: u64 = confusion.iter().flatten().sum();
    let accuracy = zero_div((confusion[0][0] + confusion[1][1]) as f64, n as f64);
    let mut per_class = [ClassMetrics::default(); 2];
    for c in 0..2 {
        let tp = confusion[c][c] as f64;
        let fp = confusion[1 - c][c] as f64;
        let fn_ = confusion[c][1 - c] as f64;
        let precision = zero_div(tp, tp + fp);
        let recall = zero_div(tp, tp + fn_);
        per_class[c] = ClassMetrics {
            precision,
            recall,
            f1: zero_div(2.0 * precision * recall, precision + recall),
            support: confusion[c][0] + confusion[c][1],
        };
    }
    let macro_f1 = (per_class[0].f1 + per_class[1].f1) / 2.0;
    EvalReport {
        task,
        source,
        accuracy,
        macro_f1,
        per_class,
        confusion,
        n,
        skipped,
        unmatched_predictions,
        unknown_as_wrong,
        train_source: None,
        test_source: None,
    }
}

/// Scores predictions against gold labels over the intersection of names.
/// Gold names without predictions and unmatched prediction rows are counted,
/// not scored. Errors when nothing intersects.
pub fn evaluate(
    preds: &PredictionSet,
    gold: &[LabeledName],
    policy: UnknownPolicy,
) -> Result<EvalReport> {
    let gold_by_name: BTreeMap<&str, ClassId> =
        gold.iter().map(|l| (l.name.as_str(), l.label)).collect();
    let mut confusion = [[0u64; 2]; 2];
    let mut matched_names: std::collections::BTreeSet<&str> = Default::default();
    let mut unmatched_predictions = 0;
    let mut unknown_as_wrong = 0;
    let mut unknown_excluded = 0;

    for row in &preds.rows {
        let Some(&gold_label) = gold_by_name.get(row.name.as_str()) else {
            unmatched_predictions += 1;
            continue;
        };
        matched_names.insert(row.name.as_str());
        match row.label {
            Some(pred) => confusion[gold_label.index()][pred.index()] += 1,
            None => match policy {
                UnknownPolicy::CountWrong => {
                    confusion[gold_label.index()][gold_label.other().index()] += 1;
                    unknown_as_wrong += 1;
                }
                UnknownPolicy::Exclude => unknown_excluded += 1,
            },
        }
    }
    if matched_names.is_empty() {
        return Err(Error::EmptyIntersection);
    }
    let skipped = (gold_by_name.len() - matched_names.len()) as u64 + unknown_excluded;
    Ok(report_from_confusion(
        preds.task,
        preds.source.clone(),
        confusion,
        skipped,
        unmatched_predictions,
        unknown_as_wrong,
    ))
}

/// Runs a trained model over a foreign test set and scores it, tagging the
/// report with the (train source, test source) pair. Errors when the model
/// task and the test task differ.
pub fn cross_evaluate(
    artifact: &ModelArtifact,
    foreign_test: &[LabeledName],
    test_task: Task,
    train_source: &str,
    test_source: &str,
) -> Result<EvalReport> {
    if artifact.task != test_task {
        return Err(Error::TaskMismatch {
            model: artifact.task.name(),
            data: test_task.name(),
        });
    }
    let preds = artifact.predictions_for(foreign_test);
    let mut report = evaluate(&preds, foreign_test, UnknownPolicy::CountWrong)?;
    report.train_source = Some(train_source.to_string());
    report.test_source = Some(test_source.to_string());
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BucketEntry {
    pub name: String,
    pub gold: ClassId,
    pub pred_a: Option<ClassId>,
    pub pred_b: Option<ClassId>,
}

/// Partition of the common evaluation set by the correctness of two
/// prediction sources: CC, CW, WC, WW, with A's correctness first.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ErrorBuckets {
    pub cc: Vec<BucketEntry>,
    pub cw: Vec<BucketEntry>,
    pub wc: Vec<BucketEntry>,
    pub ww: Vec<BucketEntry>,
}

impl ErrorBuckets {
    pub fn total(&self) -> usize {
        self.cc.len() + self.cw.len() + self.wc.len() + self.ww.len()
    }
}

/// Buckets every name that has gold plus predictions from both sources.
/// Abstentions count as wrong. Output is sorted by name within buckets.
pub fn error_buckets(
    preds_a: &PredictionSet,
    preds_b: &PredictionSet,
    gold: &[LabeledName],
) -> Result<ErrorBuckets> {
    let by_name_a: BTreeMap<&str, Option<ClassId>> = preds_a
        .rows
        .iter()
        .map(|r| (r.name.as_str(), r.label))
        .collect();
    let by_name_b: BTreeMap<&str, Option<ClassId>> = preds_b
        .rows
        .iter()
        .map(|r| (r.name.as_str(), r.label))
        .collect();

    let mut buckets = ErrorBuckets::default();
    let mut sorted_gold: Vec<&LabeledName> = gold.iter().collect();
    sorted_gold.sort_by(|x, y| x.name.cmp(&y.name));
    for item in sorted_gold {
        let (Some(&a), Some(&b)) = (
            by_name_a.get(item.name.as_str()),
            by_name_b.get(item.name.as_str()),
        ) else {
            continue;
        };
        let entry = BucketEntry {
            name: item.name.clone(),
            gold: item.label,
            pred_a: a,
            pred_b: b,
        };
        let a_correct = a == Some(item.label);
        let b_correct = b == Some(item.label);
        match (a_correct, b_correct) {
            (true, true) => buckets.cc.push(entry),
            (true, false) => buckets.cw.push(entry),
            (false, true) => buckets.wc.push(entry),
            (false, false) => buckets.ww.push(entry),
        }
    }
    if buckets.total() == 0 {
        return Err(Error::EmptyIntersection);
    }
    Ok(buckets)
}

/// Seeded uniform sample without replacement, deterministic for a fixed
/// seed. Used for the fixed-size holdouts that quota-limited baselines can
/// afford.
pub fn holdout_sample<T: Clone>(test: &[T], k: usize, seed: u64) -> Result<Vec<T>> {
    if k > test.len() {
        return Err(Error::InvalidParam(format!(
            "holdout size {k} exceeds the test set size {}",
            test.len()
        )));
    }
    let mut items: Vec<T> = test.to_vec();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x401d_0a75_ed00_0004);
    items.shuffle(&mut rng);
    items.truncate(k);
    Ok(items)
}
