//! Demographic audit metrics: representation time series, rank percentiles,
//! census-normalized shares, trend slopes, voice aggregates and
//! cross-sectional breakups. All computations are label-source agnostic:
//! they read the gender/caste fields whether those came from gold data or
//! from model predictions.

mod report;

pub use report::{
    percentile_report, representation_report, state_share_report, state_trend_report,
    voice_report, FairnessReport, NamedSeries, NamedTable, NamedValue,
};

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{normalize_name, Caste, Gender, NameRecord};
use crate::error::{Error, Result};

/// A demographic cell or marginal: at least one of the two filters is set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cohort {
    pub gender: Option<Gender>,
    pub caste: Option<Caste>,
}

impl Cohort {
    pub fn female() -> Self {
        Cohort {
            gender: Some(Gender::Female),
            caste: None,
        }
    }

    pub fn male() -> Self {
        Cohort {
            gender: Some(Gender::Male),
            caste: None,
        }
    }

    pub fn reserved() -> Self {
        Cohort {
            gender: None,
            caste: Some(Caste::Reserved),
        }
    }

    pub fn general() -> Self {
        Cohort {
            gender: None,
            caste: Some(Caste::General),
        }
    }

    pub fn cell(gender: Gender, caste: Caste) -> Self {
        Cohort {
            gender: Some(gender),
            caste: Some(caste),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.gender.is_none() && self.caste.is_none() {
            return Err(Error::InvalidParam("cohort needs at least one filter".into()));
        }
        Ok(())
    }

    /// Whether the record belongs to the cohort; None when the record lacks
    /// a label the cohort filters on.
    pub fn matches(&self, record: &NameRecord) -> Option<bool> {
        let mut verdict = true;
        if let Some(g) = self.gender {
            verdict &= record.gender? == g;
        }
        if let Some(c) = self.caste {
            verdict &= record.caste? == c;
        }
        Some(verdict)
    }

    pub fn describe(&self) -> String {
        match (self.gender, self.caste) {
            (Some(g), Some(c)) => format!("{g:?}+{c:?}"),
            (Some(g), None) => format!("{g:?}"),
            (None, Some(c)) => format!("{c:?}"),
            (None, None) => "everyone".into(),
        }
    }
}

/// Reporting period for time series.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Period {
    Year(i32),
    Month { year: i32, month: u8 },
}

impl Period {
    /// Time axis value for regression: years, with months as fractions.
    pub fn as_x(&self) -> f64 {
        match *self {
            Period::Year(y) => y as f64,
            Period::Month { year, month } => year as f64 + (month as f64 - 1.0) / 12.0,
        }
    }
}

impl std::fmt::Display for Period {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match *self {
            Period::Year(y) => write!(f, "{y}"),
            Period::Month { year, month } => write!(f, "{year}-{month:02}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PeriodKind {
    /// Group by the record's exam/observation year.
    Year,
    /// Group by the creation timestamp's UTC month.
    Month,
}

/// Per-period mode for social corpora where both readings are plausible.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeriesMode {
    /// Share within each period on its own.
    #[default]
    PerPeriod,
    /// Share within everything up to and including the period.
    Cumulative,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimePoint {
    pub period: Period,
    pub value: f64,
    pub n: u64,
}

/// Strictly increasing periods with per-period values and counts.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TimeSeries {
    pub points: Vec<TimePoint>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SeriesDiagnostics {
    /// Records without the period field.
    pub missing_period: u64,
    /// Records without the label the cohort filters on.
    pub missing_label: u64,
    /// Periods dropped because no labeled record fell in them.
    pub empty_periods: u64,
}

fn civil_from_days(days: i64) -> (i32, u8) {
    // Howard Hinnant's civil-from-days algorithm, trimmed to (year, month).
    let z = days + 719_468;
    let era = if z >= 0 { z } else { z - 146_096 } / 146_097;
    let doe = z - era * 146_097;
    let yoe = (doe - doe / 1460 + doe / 36_524 - doe / 146_096) / 365;
    let y = yoe + era * 400;
    let doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    let mp = (5 * doy + 2) / 153;
    let m = if mp < 10 { mp + 3 } else { mp - 9 };
    ((y + i64::from(m <= 2)) as i32, m as u8)
}

fn record_period(record: &NameRecord, kind: PeriodKind) -> Option<Period> {
    match kind {
        PeriodKind::Year => record.year.map(Period::Year),
        PeriodKind::Month => record.created_at.map(|epoch| {
            let (year, month) = civil_from_days(epoch.div_euclid(86_400));
            Period::Month { year, month }
        }),
    }
}

/// Cohort share per period: |cohort ∩ period| / |labeled records in period|.
/// Cumulative mode folds every period into all later ones.
pub fn representation_series(
    records: &[NameRecord],
    cohort: &Cohort,
    kind: PeriodKind,
    mode: SeriesMode,
) -> Result<(TimeSeries, SeriesDiagnostics)> {
    cohort.validate()?;
    let mut diags = SeriesDiagnostics::default();
    let mut by_period: BTreeMap<Period, (u64, u64)> = BTreeMap::new();
    for record in records {
        let Some(period) = record_period(record, kind) else {
            diags.missing_period += 1;
            continue;
        };
        let Some(in_cohort) = cohort.matches(record) else {
            diags.missing_label += 1;
            continue;
        };
        let slot = by_period.entry(period).or_insert((0, 0));
        slot.1 += 1;
        if in_cohort {
            slot.0 += 1;
        }
    }

    let mut points = Vec::with_capacity(by_period.len());
    let mut cumulative = (0u64, 0u64);
    for (period, (hits, total)) in by_period {
        let (hits, total) = match mode {
            SeriesMode::PerPeriod => (hits, total),
            SeriesMode::Cumulative => {
                cumulative.0 += hits;
                cumulative.1 += total;
                cumulative
            }
        };
        if total == 0 {
            diags.empty_periods += 1;
            continue;
        }
        points.push(TimePoint {
            period,
            value: hits as f64 / total as f64,
            n: total,
        });
    }
    Ok((TimeSeries { points }, diags))
}

/// Rank-to-percentile under the convention whose dataset mean is exactly
/// the 50th percentile: 100 * (n - rank + 0.5) / n.
pub fn percentile_of_rank(rank: u32, n: u32) -> Result<f64> {
    if rank < 1 || rank > n {
        return Err(Error::InvalidParam(format!(
            "rank {rank} outside the universe 1..={n}"
        )));
    }
    Ok(100.0 * (n as f64 - rank as f64 + 0.5) / n as f64)
}

/// Rank slice taken before cohort filtering.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum RankSlice {
    All,
    /// Top p percent by rank (rank 1 is best); keeps ceil(p/100 * n).
    TopPercent(f64),
}

impl RankSlice {
    fn keep(&self, n: usize) -> usize {
        match *self {
            RankSlice::All => n,
            RankSlice::TopPercent(p) => ((p / 100.0) * n as f64).ceil() as usize,
        }
    }

    pub fn describe(&self) -> String {
        match *self {
            RankSlice::All => "all".into(),
            RankSlice::TopPercent(p) => format!("top{p}pct"),
        }
    }
}

/// Lower-median percentile of the cohort members inside the rank slice.
/// All records must share one ranking universe (one exam-year) and carry
/// ranks within it. Returns None when the cohort is absent from the slice.
pub fn median_percentile(
    records: &[NameRecord],
    cohort: &Cohort,
    slice: RankSlice,
) -> Result<Option<f64>> {
    cohort.validate()?;
    if records.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let n = records.len() as u32;
    let keep = slice.keep(records.len()) as u32;
    let mut percentiles = Vec::new();
    for record in records {
        let rank = record
            .rank
            .ok_or_else(|| Error::Data(format!("record {:?} has no rank", record.raw_name)))?;
        if rank > n {
            return Err(Error::Data(format!(
                "rank {rank} exceeds the universe size {n}"
            )));
        }
        if rank > keep {
            continue;
        }
        if cohort.matches(record) == Some(true) {
            percentiles.push(percentile_of_rank(rank, n)?);
        }
    }
    if percentiles.is_empty() {
        return Ok(None);
    }
    percentiles.sort_by(|a, b| a.partial_cmp(b).expect("finite percentiles"));
    Ok(Some(percentiles[(percentiles.len() - 1) / 2]))
}

/// State-level census counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CensusRow {
    pub total: u64,
    pub female: u64,
    pub reserved: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CensusTable {
    pub rows: BTreeMap<String, CensusRow>,
}

impl CensusTable {
    pub fn insert(&mut self, state: impl Into<String>, row: CensusRow) -> Result<()> {
        if row.female > row.total || row.reserved > row.total {
            return Err(Error::Data(
                "census component population exceeds the state total".into(),
            ));
        }
        self.rows.insert(normalize_name(&state.into()), row);
        Ok(())
    }

    pub fn get(&self, state: &str) -> Option<&CensusRow> {
        self.rows.get(&normalize_name(state))
    }

    /// Reads `state,total,female,reserved` CSV.
    pub fn load_csv(path: &Path) -> Result<CensusTable> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut reader = csv::Reader::from_reader(file);
        let headers = reader.headers()?.clone();
        let col = |name: &str| -> Result<usize> {
            headers
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| Error::Config(format!("census file needs a {name:?} column")))
        };
        let (c_state, c_total, c_female, c_reserved) =
            (col("state")?, col("total")?, col("female")?, col("reserved")?);
        let mut table = CensusTable::default();
        for (i, row) in reader.records().enumerate() {
            let row = row?;
            let num = |idx: usize| -> Result<u64> {
                row.get(idx)
                    .unwrap_or("")
                    .trim()
                    .parse::<u64>()
                    .map_err(|_| Error::Data(format!("census row {i}: bad number")))
            };
            table.insert(
                row.get(c_state).unwrap_or("").to_string(),
                CensusRow {
                    total: num(c_total)?,
                    female: num(c_female)?,
                    reserved: num(c_reserved)?,
                },
            )?;
        }
        Ok(table)
    }

    fn cohort_population(&self, state: &str, cohort: &Cohort) -> Result<Option<(u64, u64)>> {
        let Some(row) = self.get(state) else {
            return Ok(None);
        };
        let population = match (cohort.gender, cohort.caste) {
            (Some(g), None) => match g {
                Gender::Female => row.female,
                Gender::Male => row.total - row.female,
            },
            (None, Some(c)) => match c {
                Caste::Reserved => row.reserved,
                Caste::General => row.total - row.reserved,
            },
            _ => {
                return Err(Error::InvalidParam(
                    "census normalization needs a single-dimension cohort".into(),
                ))
            }
        };
        Ok(Some((population, row.total)))
    }
}

/// Cohort share among exam takers in a state divided by the cohort's share
/// of the state population; 1.0 means representation proportional to the
/// population. None when the state has no exam records or no census row.
pub fn population_normalized_share(
    exam_records: &[NameRecord],
    cohort: &Cohort,
    census: &CensusTable,
    state: &str,
) -> Result<Option<f64>> {
    cohort.validate()?;
    let Some((cohort_pop, total_pop)) = census.cohort_population(state, cohort)? else {
        return Ok(None);
    };
    if cohort_pop == 0 || total_pop == 0 {
        return Err(Error::Data(format!(
            "census gives an empty cohort population for state {state:?}"
        )));
    }
    let state_key = normalize_name(state);
    let mut in_state = 0u64;
    let mut in_cohort = 0u64;
    for record in exam_records {
        let Some(record_state) = &record.state else {
            continue;
        };
        if normalize_name(record_state) != state_key {
            continue;
        }
        let Some(matches) = cohort.matches(record) else {
            continue;
        };
        in_state += 1;
        if matches {
            in_cohort += 1;
        }
    }
    if in_state == 0 {
        return Ok(None);
    }
    let exam_share = in_cohort as f64 / in_state as f64;
    let population_share = cohort_pop as f64 / total_pop as f64;
    Ok(Some(exam_share / population_share))
}

/// Ordinary-least-squares slope of value against the period axis.
pub fn trend_slope(series: &TimeSeries) -> Result<f64> {
    if series.points.len() < 2 {
        return Err(Error::Data("trend needs at least two points".into()));
    }
    let n = series.points.len() as f64;
    let mean_x = series.points.iter().map(|p| p.period.as_x()).sum::<f64>() / n;
    let mean_y = series.points.iter().map(|p| p.value).sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    for point in &series.points {
        let dx = point.period.as_x() - mean_x;
        sxy += dx * (point.value - mean_y);
        sxx += dx * dx;
    }
    if sxx == 0.0 {
        return Err(Error::Data("all periods identical; slope undefined".into()));
    }
    Ok(sxy / sxx)
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct VoiceStat {
    /// Sum over cohort members of followers * posts.
    pub voice: f64,
    pub members: u64,
    pub posts_total: u64,
    /// Members missing a follower or post counter (treated as zero).
    pub missing_counters: u64,
}

/// Aggregate reach of a cohort: sum of followers x posts per member.
/// Missing counters count as zero and are reported.
pub fn voice(records: &[NameRecord], cohort: &Cohort) -> Result<VoiceStat> {
    cohort.validate()?;
    let mut stat = VoiceStat::default();
    let mut voice_sum: u128 = 0;
    for record in records {
        if cohort.matches(record) != Some(true) {
            continue;
        }
        stat.members += 1;
        if record.followers.is_none() || record.posts.is_none() {
            stat.missing_counters += 1;
        }
        let followers = record.followers.unwrap_or(0) as u128;
        let posts = record.posts.unwrap_or(0) as u128;
        voice_sum += followers * posts;
        stat.posts_total += record.posts.unwrap_or(0);
    }
    stat.voice = voice_sum as f64;
    Ok(stat)
}

/// voice(A) / voice(B); errors on a zero denominator.
pub fn voice_ratio(records: &[NameRecord], cohort_a: &Cohort, cohort_b: &Cohort) -> Result<f64> {
    let a = voice(records, cohort_a)?;
    let b = voice(records, cohort_b)?;
    if b.voice == 0.0 {
        return Err(Error::Data(format!(
            "cohort {} has zero voice",
            cohort_b.describe()
        )));
    }
    Ok(a.voice / b.voice)
}

/// Basis for the message-likelihood comparison between two cells; the
/// study's phrasing admits both readings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LikelihoodBasis {
    #[default]
    Voice,
    PostCount,
}

/// How much more likely a random message is to come from cell A than from
/// cell B, on the chosen basis.
pub fn message_likelihood_ratio(
    records: &[NameRecord],
    cohort_a: &Cohort,
    cohort_b: &Cohort,
    basis: LikelihoodBasis,
) -> Result<f64> {
    match basis {
        LikelihoodBasis::Voice => voice_ratio(records, cohort_a, cohort_b),
        LikelihoodBasis::PostCount => {
            let a = voice(records, cohort_a)?;
            let b = voice(records, cohort_b)?;
            if b.posts_total == 0 {
                return Err(Error::Data(format!(
                    "cohort {} has zero posts",
                    cohort_b.describe()
                )));
            }
            Ok(a.posts_total as f64 / b.posts_total as f64)
        }
    }
}

/// Percentages of the four gender x caste cells.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrossTab {
    /// Rows are gender (Female, Male), columns caste (Reserved, General).
    pub percent: [[f64; 2]; 2],
    pub counts: [[u64; 2]; 2],
    pub total: u64,
    /// Records missing either label, excluded from the table.
    pub missing_label: u64,
}

pub fn crosstab(records: &[NameRecord]) -> Result<CrossTab> {
    let mut counts = [[0u64; 2]; 2];
    let mut missing = 0u64;
    for record in records {
        match (record.gender, record.caste) {
            (Some(g), Some(c)) => {
                counts[g.class().index()][c.class().index()] += 1;
            }
            _ => missing += 1,
        }
    }
    let total: u64 = counts.iter().flatten().sum();
    if total == 0 {
        return Err(Error::Data(
            "no record carries both gender and caste labels".into(),
        ));
    }
    let mut percent = [[0.0; 2]; 2];
    for g in 0..2 {
        for c in 0..2 {
            percent[g][c] = counts[g][c] as f64 / total as f64 * 100.0;
        }
    }
    Ok(CrossTab {
        percent,
        counts,
        total,
        missing_label: missing,
    })
}

/// Deterministic sorted slice of records: the prefix or suffix fraction of
/// the set ordered by a metadata key, ties broken by normalized name.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SliceSpec {
    TopFollowers(f64),
    BottomFollowers(f64),
    OldestCreated(f64),
    NewestCreated(f64),
}

impl SliceSpec {
    fn frac(&self) -> f64 {
        match *self {
            SliceSpec::TopFollowers(f)
            | SliceSpec::BottomFollowers(f)
            | SliceSpec::OldestCreated(f)
            | SliceSpec::NewestCreated(f) => f,
        }
    }

    pub fn describe(&self) -> String {
        match *self {
            SliceSpec::TopFollowers(f) => format!("top {f} by followers"),
            SliceSpec::BottomFollowers(f) => format!("bottom {f} by followers"),
            SliceSpec::OldestCreated(f) => format!("oldest {f} by creation date"),
            SliceSpec::NewestCreated(f) => format!("newest {f} by creation date"),
        }
    }
}

pub fn rank_slice(records: &[NameRecord], spec: SliceSpec) -> Result<Vec<NameRecord>> {
    let frac = spec.frac();
    if !(frac > 0.0 && frac <= 1.0) {
        return Err(Error::InvalidParam(format!(
            "slice fraction must be in (0, 1], got {frac}"
        )));
    }
    let key = |r: &NameRecord| -> Result<i128> {
        match spec {
            SliceSpec::TopFollowers(_) | SliceSpec::BottomFollowers(_) => r
                .followers
                .map(|f| f as i128)
                .ok_or_else(|| Error::Data(format!("record {:?} has no followers", r.raw_name))),
            SliceSpec::OldestCreated(_) | SliceSpec::NewestCreated(_) => r
                .created_at
                .map(|t| t as i128)
                .ok_or_else(|| Error::Data(format!("record {:?} has no created_at", r.raw_name))),
        }
    };
    let mut keyed: Vec<(i128, String, &NameRecord)> = records
        .iter()
        .map(|r| Ok((key(r)?, normalize_name(&r.raw_name), r)))
        .collect::<Result<_>>()?;
    let descending = matches!(
        spec,
        SliceSpec::TopFollowers(_) | SliceSpec::NewestCreated(_)
    );
    keyed.sort_by(|a, b| {
        let ord = if descending {
            b.0.cmp(&a.0)
        } else {
            a.0.cmp(&b.0)
        };
        ord.then_with(|| a.1.cmp(&b.1))
    });
    let take = ((frac * records.len() as f64).ceil() as usize).min(records.len());
    Ok(keyed.into_iter().take(take).map(|(_, _, r)| r.clone()).collect())
}
