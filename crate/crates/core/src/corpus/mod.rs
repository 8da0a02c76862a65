//! Corpus handling: record schemas, name normalization and validation,
//! majority-vote deduplication, stratified splitting, and CSV ingestion.

mod synth;

pub use synth::{
    generate_synthetic_corpus, marker_spec, SocialParams, SyntheticCorpus, SyntheticSpec,
};

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Classification task. Each task has exactly two labels with a fixed order;
/// index 0 wins majority-vote ties.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Gender,
    Caste,
}

impl Task {
    pub fn name(self) -> &'static str {
        match self {
            Task::Gender => "gender",
            Task::Caste => "caste",
        }
    }

    /// Label names in the fixed order (tie-break winner first).
    pub fn labels(self) -> [&'static str; 2] {
        match self {
            Task::Gender => ["Female", "Male"],
            Task::Caste => ["Reserved", "General"],
        }
    }

    pub fn label_name(self, class: ClassId) -> &'static str {
        self.labels()[class.index()]
    }

    /// Parses a label string (canonical name or common abbreviations).
    pub fn parse_label(self, value: &str) -> Option<ClassId> {
        let v = value.trim().to_uppercase();
        match self {
            Task::Gender => match v.as_str() {
                "F" | "FEMALE" => Some(ClassId(0)),
                "M" | "MALE" => Some(ClassId(1)),
                _ => None,
            },
            Task::Caste => match v.as_str() {
                "RESERVED" | "R" | "OBC" | "SC" | "ST" | "BC" => Some(ClassId(0)),
                "GENERAL" | "G" | "GEN" | "UR" | "OPEN" => Some(ClassId(1)),
                _ => None,
            },
        }
    }
}

impl std::str::FromStr for Task {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_lowercase().as_str() {
            "gender" => Ok(Task::Gender),
            "caste" => Ok(Task::Caste),
            other => Err(Error::Config(format!("unknown task {other:?}"))),
        }
    }
}

/// Index of a label within a task's fixed label order (0 or 1).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ClassId(pub u8);

impl ClassId {
    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn other(self) -> ClassId {
        ClassId(1 - self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Gender {
    Female,
    Male,
}

impl Gender {
    pub fn class(self) -> ClassId {
        match self {
            Gender::Female => ClassId(0),
            Gender::Male => ClassId(1),
        }
    }

    pub fn from_class(class: ClassId) -> Gender {
        if class.0 == 0 {
            Gender::Female
        } else {
            Gender::Male
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Caste {
    Reserved,
    General,
}

impl Caste {
    pub fn class(self) -> ClassId {
        match self {
            Caste::Reserved => ClassId(0),
            Caste::General => ClassId(1),
        }
    }

    pub fn from_class(class: ClassId) -> Caste {
        if class.0 == 0 {
            Caste::Reserved
        } else {
            Caste::General
        }
    }
}

/// One raw observation: a name plus whatever labels and study metadata the
/// source row carried.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct NameRecord {
    pub raw_name: String,
    pub gender: Option<Gender>,
    pub caste: Option<Caste>,
    pub year: Option<i32>,
    pub state: Option<String>,
    pub rank: Option<u32>,
    pub followers: Option<u64>,
    pub posts: Option<u64>,
    pub created_at: Option<i64>,
}

impl NameRecord {
    pub fn named(raw_name: impl Into<String>) -> Self {
        NameRecord {
            raw_name: raw_name.into(),
            ..NameRecord::default()
        }
    }

    pub fn label(&self, task: Task) -> Option<ClassId> {
        match task {
            Task::Gender => self.gender.map(Gender::class),
            Task::Caste => self.caste.map(Caste::class),
        }
    }

    pub fn set_label(&mut self, task: Task, class: ClassId) {
        match task {
            Task::Gender => self.gender = Some(Gender::from_class(class)),
            Task::Caste => self.caste = Some(Caste::from_class(class)),
        }
    }

    /// Checks the record-role invariant: a row never carries both an exam
    /// rank and social-media counters, and rank is positive when present.
    pub fn validate(&self) -> Result<()> {
        if self.rank == Some(0) {
            return Err(Error::Data("rank must be positive".into()));
        }
        if self.rank.is_some() && (self.followers.is_some() || self.posts.is_some()) {
            return Err(Error::Data(format!(
                "record {:?} carries both exam rank and social-media counters",
                self.raw_name
            )));
        }
        Ok(())
    }
}

/// A unique normalized name with its majority-vote label.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledName {
    pub name: String,
    pub label: ClassId,
    pub support: u32,
    pub label_votes: [u32; 2],
}

impl LabeledName {
    pub fn new(name: impl Into<String>, label: ClassId) -> Self {
        let mut votes = [0, 0];
        votes[label.index()] = 1;
        LabeledName {
            name: name.into(),
            label,
            support: 1,
            label_votes: votes,
        }
    }
}

/// A stratified train/test partition of unique names.
#[derive(Debug, Clone)]
pub struct SplitPair {
    pub train: Vec<LabeledName>,
    pub test: Vec<LabeledName>,
    pub seed: u64,
}

/// Upper-cases, trims, collapses whitespace, and strips every character
/// outside A-Z, space, apostrophe and hyphen. Periods are dropped so
/// initials like "A.P.J." collapse to "APJ". Never fails; the result may
/// be empty.
pub fn normalize_name(raw: &str) -> String {
    let mut out = String::with_capacity(raw.len());
    let mut pending_space = false;
    for ch in raw.to_uppercase().chars() {
        let keep = match ch {
            'A'..='Z' | '\'' | '-' => Some(ch),
            '.' => None,
            c if c.is_whitespace() => {
                pending_space = true;
                continue;
            }
            _ => None,
        };
        if let Some(c) = keep {
            if pending_space && !out.is_empty() {
                out.push(' ');
            }
            pending_space = false;
            out.push(c);
        }
    }
    out
}

/// Validity rule applied after normalization: length 2..=64, at least one
/// word with two or more letters, and at least 60% of non-space characters
/// alphabetic.
pub fn is_valid_name(normalized: &str) -> bool {
    let len = normalized.chars().count();
    if !(2..=64).contains(&len) {
        return false;
    }
    let has_word = normalized
        .split(' ')
        .any(|w| w.chars().filter(char::is_ascii_alphabetic).count() >= 2);
    if !has_word {
        return false;
    }
    let non_space = normalized.chars().filter(|c| *c != ' ').count();
    let alpha = normalized
        .chars()
        .filter(char::is_ascii_alphabetic)
        .count();
    alpha * 5 >= non_space * 3
}

/// Collapses raw records into one [`LabeledName`] per unique normalized
/// name, using strict majority voting for the label. Exact ties go to the
/// label earlier in the task's fixed order.
pub fn deduplicate(records: &[NameRecord], task: Task) -> Result<Vec<LabeledName>> {
    let mut votes: BTreeMap<String, [u32; 2]> = BTreeMap::new();
    for (row, record) in records.iter().enumerate() {
        let label = record.label(task).ok_or(Error::MissingLabel {
            row,
            task: task.name(),
        })?;
        let name = normalize_name(&record.raw_name);
        if !is_valid_name(&name) {
            return Err(Error::InvalidName { row, name });
        }
        votes.entry(name).or_default()[label.index()] += 1;
    }
    Ok(votes
        .into_iter()
        .map(|(name, label_votes)| {
            let label = if label_votes[1] > label_votes[0] {
                ClassId(1)
            } else {
                ClassId(0)
            };
            LabeledName {
                name,
                label,
                support: label_votes[0] + label_votes[1],
                label_votes,
            }
        })
        .collect())
}

/// Splits unique names into train and test, stratified per label. The
/// partition is deterministic for a fixed seed: each stratum is shuffled
/// with its own seeded generator and cut at a prefix. Train sizes per
/// stratum are floor(ratio * n) plus largest-remainder corrections so the
/// overall train size is round(ratio * total).
pub fn split(labeled: &[LabeledName], ratio: f64, seed: u64) -> Result<SplitPair> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::InvalidParam(format!(
            "split ratio must be in (0, 1), got {ratio}"
        )));
    }
    if labeled.is_empty() {
        return Err(Error::EmptyCorpus);
    }

    let mut strata: [Vec<LabeledName>; 2] = [Vec::new(), Vec::new()];
    for item in labeled {
        strata[item.label.index()].push(item.clone());
    }
    for (k, stratum) in strata.iter_mut().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(k as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
        stratum.shuffle(&mut rng);
    }

    let total = labeled.len();
    let target = (ratio * total as f64).round() as usize;
    let mut take = [0usize; 2];
    let mut remainder = [0f64; 2];
    for k in 0..2 {
        let exact = ratio * strata[k].len() as f64;
        take[k] = exact.floor() as usize;
        remainder[k] = exact - exact.floor();
    }
    let mut leftover = target.saturating_sub(take[0] + take[1]);
    let mut order = [0usize, 1usize];
    order.sort_by(|&a, &b| {
        remainder[b]
            .partial_cmp(&remainder[a])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    for &k in &order {
        if leftover > 0 && take[k] < strata[k].len() {
            take[k] += 1;
            leftover -= 1;
        }
    }

    let mut train = Vec::with_capacity(target);
    let mut test = Vec::with_capacity(total - target);
    for (k, stratum) in strata.into_iter().enumerate() {
        for (i, item) in stratum.into_iter().enumerate() {
            if i < take[k] {
                train.push(item);
            } else {
                test.push(item);
            }
        }
    }
    Ok(SplitPair { train, test, seed })
}

/// Maps canonical record fields to column names in a source CSV file.
/// Only `name` is required.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ColumnMap {
    pub name: String,
    pub gender: Option<String>,
    pub caste: Option<String>,
    pub year: Option<String>,
    pub state: Option<String>,
    pub rank: Option<String>,
    pub followers: Option<String>,
    pub posts: Option<String>,
    pub created_at: Option<String>,
}

impl Default for ColumnMap {
    fn default() -> Self {
        ColumnMap {
            name: "name".into(),
            gender: Some("gender".into()),
            caste: Some("caste".into()),
            year: Some("year".into()),
            state: Some("state".into()),
            rank: Some("rank".into()),
            followers: Some("followers".into()),
            posts: Some("posts".into()),
            created_at: Some("created_at".into()),
        }
    }
}

impl ColumnMap {
    /// A map that only expects the name column, ignoring everything else.
    pub fn name_only(column: impl Into<String>) -> Self {
        ColumnMap {
            name: column.into(),
            gender: None,
            caste: None,
            year: None,
            state: None,
            rank: None,
            followers: None,
            posts: None,
            created_at: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct IngestOptions {
    /// Ingestion aborts when malformed rows exceed this fraction of all rows.
    pub max_malformed_fraction: f64,
}

impl Default for IngestOptions {
    fn default() -> Self {
        IngestOptions {
            max_malformed_fraction: 0.1,
        }
    }
}

/// Result of a CSV ingestion pass: the surviving records plus drop counters.
#[derive(Debug, Clone)]
pub struct IngestReport {
    pub records: Vec<NameRecord>,
    pub total_rows: usize,
    pub dropped_invalid: usize,
    pub malformed: usize,
    /// First few (row, reason) pairs for malformed rows, for diagnostics.
    pub malformed_examples: Vec<(usize, String)>,
}

fn resolve_column(headers: &csv::StringRecord, wanted: &str) -> Result<usize> {
    headers
        .iter()
        .position(|h| h == wanted)
        .ok_or_else(|| Error::Config(format!("mapped column {wanted:?} not present in file")))
}

/// Optional fields mapped to their canonical default name are probes:
/// absent columns resolve to None. A custom-named mapping is an explicit
/// request and must exist.
fn optional_column(
    headers: &csv::StringRecord,
    wanted: &Option<String>,
    canonical: &str,
) -> Result<Option<usize>> {
    match wanted {
        Some(name) => match headers.iter().position(|h| h == name) {
            Some(index) => Ok(Some(index)),
            None if name == canonical => Ok(None),
            None => Err(Error::Config(format!(
                "mapped column {name:?} not present in file"
            ))),
        },
        None => Ok(None),
    }
}

/// Reads one NameRecord per data row. Rows whose name fails the validity
/// rule after normalization are counted and dropped; structurally malformed
/// rows (bad numbers, unknown labels, role conflicts) are counted and abort
/// ingestion above the configured threshold.
pub fn ingest_csv(path: &Path, map: &ColumnMap, options: &IngestOptions) -> Result<IngestReport> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new().flexible(true).from_reader(file);
    let headers = reader.headers()?.clone();

    let col_name = resolve_column(&headers, &map.name)?;
    let col_gender = optional_column(&headers, &map.gender, "gender")?;
    let col_caste = optional_column(&headers, &map.caste, "caste")?;
    let col_year = optional_column(&headers, &map.year, "year")?;
    let col_state = optional_column(&headers, &map.state, "state")?;
    let col_rank = optional_column(&headers, &map.rank, "rank")?;
    let col_followers = optional_column(&headers, &map.followers, "followers")?;
    let col_posts = optional_column(&headers, &map.posts, "posts")?;
    let col_created = optional_column(&headers, &map.created_at, "created_at")?;

    let mut report = IngestReport {
        records: Vec::new(),
        total_rows: 0,
        dropped_invalid: 0,
        malformed: 0,
        malformed_examples: Vec::new(),
    };

    fn field(row: &csv::StringRecord, idx: Option<usize>) -> Option<&str> {
        idx.and_then(|i| row.get(i)).map(str::trim).filter(|s| !s.is_empty())
    }

    fn parse_num<T: std::str::FromStr>(value: &str, what: &str) -> std::result::Result<T, String> {
        value
            .parse::<T>()
            .map_err(|_| format!("bad {what} value {value:?}"))
    }

    for (row_index, row) in reader.records().enumerate() {
        report.total_rows += 1;
        let fail = |report: &mut IngestReport, reason: String| {
            report.malformed += 1;
            if report.malformed_examples.len() < 10 {
                report.malformed_examples.push((row_index, reason));
            }
        };

        let row = match row {
            Ok(r) => r,
            Err(e) => {
                fail(&mut report, e.to_string());
                continue;
            }
        };

        let parsed: std::result::Result<NameRecord, String> = (|| {
            let raw_name = row
                .get(col_name)
                .ok_or_else(|| "missing name field".to_string())?
                .to_string();
            let gender = match field(&row, col_gender) {
                Some(v) => Some(
                    Task::Gender
                        .parse_label(v)
                        .map(Gender::from_class)
                        .ok_or_else(|| format!("unknown gender value {v:?}"))?,
                ),
                None => None,
            };
            let caste = match field(&row, col_caste) {
                Some(v) => Some(
                    Task::Caste
                        .parse_label(v)
                        .map(Caste::from_class)
                        .ok_or_else(|| format!("unknown caste value {v:?}"))?,
                ),
                None => None,
            };
            let record = NameRecord {
                raw_name,
                gender,
                caste,
                year: field(&row, col_year)
                    .map(|v| parse_num::<i32>(v, "year"))
                    .transpose()?,
                state: field(&row, col_state).map(|v| v.to_uppercase()),
                rank: field(&row, col_rank)
                    .map(|v| parse_num::<u32>(v, "rank"))
                    .transpose()?,
                followers: field(&row, col_followers)
                    .map(|v| parse_num::<u64>(v, "followers"))
                    .transpose()?,
                posts: field(&row, col_posts)
                    .map(|v| parse_num::<u64>(v, "posts"))
                    .transpose()?,
                created_at: field(&row, col_created)
                    .map(|v| parse_num::<i64>(v, "created_at"))
                    .transpose()?,
            };
            record.validate().map_err(|e| e.to_string())?;
            Ok(record)
        })();

        match parsed {
            Ok(record) => {
                if is_valid_name(&normalize_name(&record.raw_name)) {
                    report.records.push(record);
                } else {
                    report.dropped_invalid += 1;
                }
            }
            Err(reason) => fail(&mut report, reason),
        }
    }

    if report.total_rows > 0 {
        let fraction = report.malformed as f64 / report.total_rows as f64;
        if fraction > options.max_malformed_fraction {
            return Err(Error::TooManyMalformed {
                malformed: report.malformed,
                total: report.total_rows,
            });
        }
    }
    Ok(report)
}

/// Total and unique-name counts for a corpus, in the shape of the dataset
/// summary tables the reports use.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub total: u64,
    pub unique: u64,
    pub unique_pct: f64,
}

impl DatasetStats {
    pub fn new(total: u64, unique: u64) -> Self {
        let unique_pct = if total == 0 {
            0.0
        } else {
            unique as f64 / total as f64 * 100.0
        };
        DatasetStats {
            total,
            unique,
            unique_pct,
        }
    }
}

impl fmt::Display for DatasetStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "total {} | unique {} | {:.2}% unique",
            self.total, self.unique, self.unique_pct
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn normalize_collapses_whitespace_and_case() {
        assert_eq!(normalize_name("  jolly   Abraham "), "JOLLY ABRAHAM");
    }

    #[test]
    fn normalize_strips_periods_after_initials() {
        assert_eq!(normalize_name("A.P.J. Abdul Kalam"), "APJ ABDUL KALAM");
    }

    #[test]
    fn normalize_drops_non_latin_and_digits() {
        assert_eq!(normalize_name("Müller123"), "MLLER");
    }

    #[test]
    fn normalize_keeps_apostrophe_and_hyphen() {
        assert_eq!(normalize_name("d'souza-rai"), "D'SOUZA-RAI");
    }

    #[test]
    fn valid_name_rules() {
        assert!(is_valid_name("KARISHMA CHETTRI"));
        assert!(!is_valid_name("X"));
        assert!(!is_valid_name(""));
        assert!(!is_valid_name("A B C"));
        assert!(!is_valid_name(&"A".repeat(65)));
        assert!(is_valid_name("AB"));
    }

    fn gender_records(pairs: &[(&str, Gender)]) -> Vec<NameRecord> {
        pairs
            .iter()
            .map(|(name, g)| NameRecord {
                gender: Some(*g),
                ..NameRecord::named(*name)
            })
            .collect()
    }

    #[test]
    fn dedup_majority_and_tie() {
        let records = gender_records(&[
            ("ANU", Gender::Female),
            ("ANU", Gender::Female),
            ("ANU", Gender::Male),
            ("KIRAN", Gender::Male),
            ("KIRAN", Gender::Female),
            ("RAJ", Gender::Male),
        ]);
        let out = deduplicate(&records, Task::Gender).unwrap();
        assert_eq!(out.len(), 3);
        let anu = out.iter().find(|l| l.name == "ANU").unwrap();
        assert_eq!((anu.label, anu.support), (ClassId(0), 3));
        let kiran = out.iter().find(|l| l.name == "KIRAN").unwrap();
        // exact tie goes to Female, the first label in the fixed order
        assert_eq!((kiran.label, kiran.support), (ClassId(0), 2));
        let raj = out.iter().find(|l| l.name == "RAJ").unwrap();
        assert_eq!((raj.label, raj.support), (ClassId(1), 1));
    }

    #[test]
    fn dedup_rejects_missing_label() {
        let records = vec![NameRecord::named("ANU")];
        assert!(matches!(
            deduplicate(&records, Task::Gender),
            Err(Error::MissingLabel { row: 0, .. })
        ));
    }

    #[test]
    fn caste_tie_goes_to_reserved() {
        let records = vec![
            NameRecord {
                caste: Some(Caste::General),
                ..NameRecord::named("KIRAN")
            },
            NameRecord {
                caste: Some(Caste::Reserved),
                ..NameRecord::named("KIRAN")
            },
        ];
        let out = deduplicate(&records, Task::Caste).unwrap();
        assert_eq!(out[0].label, Caste::Reserved.class());
    }

    fn toy_labeled(n_per_class: usize) -> Vec<LabeledName> {
        let mut out = Vec::new();
        for i in 0..n_per_class {
            out.push(LabeledName::new(format!("FEM{i:03}"), ClassId(0)));
            out.push(LabeledName::new(format!("MAL{i:03}"), ClassId(1)));
        }
        out
    }

    #[test]
    fn split_sizes_and_determinism() {
        let labeled = toy_labeled(5);
        let pair = split(&labeled, 0.7, 1).unwrap();
        assert_eq!(pair.train.len(), 7);
        assert_eq!(pair.test.len(), 3);
        let by_class = |side: &[LabeledName], c: u8| {
            side.iter().filter(|l| l.label == ClassId(c)).count()
        };
        let f = by_class(&pair.train, 0);
        let m = by_class(&pair.train, 1);
        assert!((f == 3 && m == 4) || (f == 4 && m == 3));

        let again = split(&labeled, 0.7, 1).unwrap();
        assert_eq!(pair.train, again.train);
        assert_eq!(pair.test, again.test);
    }

    #[test]
    fn split_rejects_bad_ratio() {
        let labeled = toy_labeled(2);
        assert!(split(&labeled, 1.2, 1).is_err());
        assert!(split(&labeled, 0.0, 1).is_err());
    }

    #[test]
    fn ingest_aborts_above_malformed_threshold() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("raw.csv");
        std::fs::write(
            &path,
            "name,rank\nANITA DEVI,1\nRAJ KUMAR,notanumber\nKAVITA RAO,zero\n",
        )
        .unwrap();
        let lenient = IngestOptions {
            max_malformed_fraction: 0.7,
        };
        let report = ingest_csv(&path, &ColumnMap::default(), &lenient).unwrap();
        assert_eq!(report.malformed, 2);
        assert_eq!(report.records.len(), 1);

        let tighter = IngestOptions {
            max_malformed_fraction: 0.2,
        };
        assert!(matches!(
            ingest_csv(&path, &ColumnMap::default(), &tighter),
            Err(Error::TooManyMalformed {
                malformed: 2,
                total: 3
            })
        ));
    }

    #[test]
    fn ingest_rejects_role_conflicts() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("raw.csv");
        std::fs::write(
            &path,
            "name,rank,followers\nANITA DEVI,1,500\nRAJ KUMAR,,300\n",
        )
        .unwrap();
        let options = IngestOptions {
            max_malformed_fraction: 0.6,
        };
        let report = ingest_csv(&path, &ColumnMap::default(), &options).unwrap();
        // a row carrying both an exam rank and social counters is malformed
        assert_eq!(report.malformed, 1);
        assert_eq!(report.records.len(), 1);
        assert_eq!(report.records[0].followers, Some(300));
    }

    #[test]
    fn stats_formats_totals() {
        let stats = DatasetStats::new(487_080, 341_430);
        assert!((stats.unique_pct - 70.097).abs() < 1e-2);
        let text = stats.to_string();
        assert!(text.contains("487080") && text.contains("341430"));
    }

    proptest! {
        #[test]
        fn normalize_is_idempotent(raw in "\\PC{0,40}") {
            let once = normalize_name(&raw);
            prop_assert_eq!(normalize_name(&once), once);
        }

        #[test]
        fn dedup_matches_counting_oracle(
            votes in proptest::collection::vec((0usize..10, prop::bool::ANY), 1..60)
        ) {
            let word = |i: usize| format!("NAME{}", char::from(b'A' + i as u8));
            let records: Vec<NameRecord> = votes
                .iter()
                .map(|(i, male)| NameRecord {
                    gender: Some(if *male { Gender::Male } else { Gender::Female }),
                    ..NameRecord::named(word(*i))
                })
                .collect();
            let out = deduplicate(&records, Task::Gender).unwrap();

            // independent counting oracle
            let mut counts: BTreeMap<String, (u32, u32)> = BTreeMap::new();
            for (i, male) in &votes {
                let e = counts.entry(word(*i)).or_default();
                if *male { e.1 += 1 } else { e.0 += 1 }
            }
            prop_assert_eq!(out.len(), counts.len());
            let support_sum: u32 = out.iter().map(|l| l.support).sum();
            prop_assert_eq!(support_sum as usize, votes.len());
            for item in &out {
                let (f, m) = counts[&item.name];
                let expect = if m > f { ClassId(1) } else { ClassId(0) };
                prop_assert_eq!(item.label, expect);
                prop_assert_eq!(item.label_votes, [f, m]);
            }
        }

        #[test]
        fn split_is_a_partition(n_f in 1usize..40, n_m in 1usize..40, seed in 0u64..50) {
            let mut labeled = Vec::new();
            for i in 0..n_f { labeled.push(LabeledName::new(format!("F{i:03}"), ClassId(0))); }
            for i in 0..n_m { labeled.push(LabeledName::new(format!("M{i:03}"), ClassId(1))); }
            let pair = split(&labeled, 0.7, seed).unwrap();
            let mut seen: Vec<&str> = pair.train.iter().chain(pair.test.iter()).map(|l| l.name.as_str()).collect();
            seen.sort_unstable();
            let mut expect: Vec<&str> = labeled.iter().map(|l| l.name.as_str()).collect();
            expect.sort_unstable();
            prop_assert_eq!(seen, expect);
            for (k, n) in [(0u8, n_f), (1u8, n_m)] {
                let train_k = pair.train.iter().filter(|l| l.label == ClassId(k)).count() as f64;
                prop_assert!((train_k - 0.7 * n as f64).abs() <= 1.0);
            }
        }
    }
}
