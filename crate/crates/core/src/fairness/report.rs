//! Audit-report assembly: one [`FairnessReport`] per research question,
//! serializable as JSON plus flat CSV tables for external plotting. Every
//! number in a report is traceable to the input slice and parameters
//! recorded in it.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::corpus::NameRecord;
use crate::error::{Error, Result};

use super::{
    crosstab, median_percentile, population_normalized_share, rank_slice, representation_series,
    trend_slope, voice, voice_ratio, CensusTable, Cohort, LikelihoodBasis,
    message_likelihood_ratio, PeriodKind, RankSlice, SeriesMode, SliceSpec, TimeSeries,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedSeries {
    pub name: String,
    pub series: TimeSeries,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedTable {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedValue {
    pub name: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FairnessReport {
    /// RQ1..RQ4, ARQ1, ARQ2.
    pub question: String,
    /// Where the labels came from: "gold" or a model tag.
    pub provenance: String,
    pub parameters: BTreeMap<String, String>,
    pub series: Vec<NamedSeries>,
    pub tables: Vec<NamedTable>,
    pub ratios: Vec<NamedValue>,
    pub diagnostics: BTreeMap<String, u64>,
}

impl FairnessReport {
    fn new(question: &str, provenance: &str) -> Self {
        FairnessReport {
            question: question.to_string(),
            provenance: provenance.to_string(),
            parameters: BTreeMap::new(),
            series: Vec::new(),
            tables: Vec::new(),
            ratios: Vec::new(),
            diagnostics: BTreeMap::new(),
        }
    }

    fn slug(raw: &str) -> String {
        raw.chars()
            .map(|c| {
                if c.is_ascii_alphanumeric() {
                    c.to_ascii_lowercase()
                } else {
                    '_'
                }
            })
            .collect()
    }

    /// Writes the report as `<question>.json` plus one flat CSV per series
    /// and table; returns the written paths in a fixed order.
    pub fn write_files(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let mut written = Vec::new();
        let prefix = Self::slug(&self.question);

        let json_path = dir.join(format!("{prefix}.json"));
        let json = serde_json::to_string_pretty(self)
            .map_err(|e| Error::Data(format!("report encode: {e}")))?;
        std::fs::write(&json_path, json + "\n").map_err(|e| Error::io(&json_path, e))?;
        written.push(json_path);

        for named in &self.series {
            let path = dir.join(format!("{prefix}_{}.csv", Self::slug(&named.name)));
            let mut writer = csv::Writer::from_path(&path).map_err(Error::Csv)?;
            writer
                .write_record(["period", "value", "n"])
                .map_err(Error::Csv)?;
            for point in &named.series.points {
                writer
                    .write_record([
                        point.period.to_string(),
                        format!("{}", point.value),
                        point.n.to_string(),
                    ])
                    .map_err(Error::Csv)?;
            }
            writer.flush().map_err(|e| Error::io(&path, e))?;
            written.push(path);
        }

        for table in &self.tables {
            let path = dir.join(format!("{prefix}_{}.csv", Self::slug(&table.name)));
            let mut writer = csv::Writer::from_path(&path).map_err(Error::Csv)?;
            writer.write_record(&table.columns).map_err(Error::Csv)?;
            for row in &table.rows {
                writer.write_record(row).map_err(Error::Csv)?;
            }
            writer.flush().map_err(|e| Error::io(&path, e))?;
            written.push(path);
        }

        if !self.ratios.is_empty() {
            let path = dir.join(format!("{prefix}_ratios.csv"));
            let mut writer = csv::Writer::from_path(&path).map_err(Error::Csv)?;
            writer.write_record(["name", "value"]).map_err(Error::Csv)?;
            for ratio in &self.ratios {
                writer
                    .write_record([ratio.name.clone(), format!("{}", ratio.value)])
                    .map_err(Error::Csv)?;
            }
            writer.flush().map_err(|e| Error::io(&path, e))?;
            written.push(path);
        }
        Ok(written)
    }
}

fn has_gender(records: &[NameRecord]) -> bool {
    records.iter().any(|r| r.gender.is_some())
}

fn has_caste(records: &[NameRecord]) -> bool {
    records.iter().any(|r| r.caste.is_some())
}

fn fmt_opt(value: Option<f64>) -> String {
    value.map(|v| format!("{v:.2}")).unwrap_or_else(|| "absent".into())
}

/// RQ1/RQ2/RQ3: cohort share per period for women and reserved-category
/// members, on whichever label dimensions the corpus carries.
pub fn representation_report(
    question: &str,
    records: &[NameRecord],
    kind: PeriodKind,
    mode: SeriesMode,
    provenance: &str,
) -> Result<FairnessReport> {
    let mut report = FairnessReport::new(question, provenance);
    report.parameters.insert(
        "period".into(),
        format!("{kind:?}").to_lowercase(),
    );
    report
        .parameters
        .insert("mode".into(), format!("{mode:?}").to_lowercase());
    report
        .parameters
        .insert("records".into(), records.len().to_string());

    let mut cohorts: Vec<(&str, Cohort)> = Vec::new();
    if has_gender(records) {
        cohorts.push(("female_share", Cohort::female()));
    }
    if has_caste(records) {
        cohorts.push(("reserved_share", Cohort::reserved()));
    }
    if cohorts.is_empty() {
        return Err(Error::Data(
            "corpus carries neither gender nor caste labels".into(),
        ));
    }
    for (name, cohort) in cohorts {
        let (series, diags) = representation_series(records, &cohort, kind, mode)?;
        report.diagnostics.insert(
            format!("{name}_missing_period"),
            diags.missing_period,
        );
        report
            .diagnostics
            .insert(format!("{name}_missing_label"), diags.missing_label);
        report.series.push(NamedSeries {
            name: name.to_string(),
            series,
        });
    }
    Ok(report)
}

/// Median-percentile table, one row per exam-year with All / Top 1% /
/// Top 10% slices for women and reserved members. Records must carry ranks
/// within their own year universe.
pub fn percentile_report(
    question: &str,
    records: &[NameRecord],
    provenance: &str,
) -> Result<FairnessReport> {
    let mut report = FairnessReport::new(question, provenance);
    let mut by_year: BTreeMap<i32, Vec<NameRecord>> = BTreeMap::new();
    for record in records {
        let year = record
            .year
            .ok_or_else(|| Error::Data(format!("record {:?} has no year", record.raw_name)))?;
        by_year.entry(year).or_default().push(record.clone());
    }
    let slices = [
        ("all", RankSlice::All),
        ("top1pct", RankSlice::TopPercent(1.0)),
        ("top10pct", RankSlice::TopPercent(10.0)),
    ];
    let mut cohorts: Vec<(&str, Cohort)> = Vec::new();
    if has_gender(records) {
        cohorts.push(("women", Cohort::female()));
    }
    if has_caste(records) {
        cohorts.push(("reserved", Cohort::reserved()));
    }
    if cohorts.is_empty() {
        return Err(Error::Data(
            "corpus carries neither gender nor caste labels".into(),
        ));
    }

    let mut columns = vec!["year".to_string()];
    for (cohort_name, _) in &cohorts {
        for (slice_name, _) in &slices {
            columns.push(format!("{cohort_name}_{slice_name}"));
        }
    }
    let mut rows = Vec::new();
    for (year, year_records) in &by_year {
        let mut row = vec![year.to_string()];
        for (_, cohort) in &cohorts {
            for (_, slice) in &slices {
                let value = median_percentile(year_records, cohort, *slice)?;
                row.push(fmt_opt(value));
            }
        }
        rows.push(row);
    }
    report
        .parameters
        .insert("years".into(), by_year.len().to_string());
    report.tables.push(NamedTable {
        name: "median_percentile".into(),
        columns,
        rows,
    });
    Ok(report)
}

/// ARQ1: per-state population-normalized representation for women and
/// reserved members, 1.0 meaning proportional to the census population.
pub fn state_share_report(
    question: &str,
    records: &[NameRecord],
    census: &CensusTable,
    provenance: &str,
) -> Result<FairnessReport> {
    let mut report = FairnessReport::new(question, provenance);
    report
        .parameters
        .insert("census_states".into(), census.rows.len().to_string());
    let mut rows = Vec::new();
    for state in census.rows.keys() {
        let female = population_normalized_share(records, &Cohort::female(), census, state)?;
        let reserved = population_normalized_share(records, &Cohort::reserved(), census, state)?;
        if female.is_none() && reserved.is_none() {
            continue;
        }
        rows.push(vec![state.clone(), fmt_opt(female), fmt_opt(reserved)]);
    }
    if rows.is_empty() {
        return Err(Error::Data(
            "no state had both census and exam records".into(),
        ));
    }
    report.tables.push(NamedTable {
        name: "population_normalized_share".into(),
        columns: vec![
            "state".into(),
            "female_share_index".into(),
            "reserved_share_index".into(),
        ],
        rows,
    });
    Ok(report)
}

/// ARQ2: OLS slope of the year-by-year population-normalized percentage
/// per state; positive slopes mean shrinking bias.
pub fn state_trend_report(
    question: &str,
    records: &[NameRecord],
    census: &CensusTable,
    provenance: &str,
) -> Result<FairnessReport> {
    use super::{Period, TimePoint};

    let mut report = FairnessReport::new(question, provenance);
    let mut years: Vec<i32> = records.iter().filter_map(|r| r.year).collect();
    years.sort_unstable();
    years.dedup();
    if years.len() < 2 {
        return Err(Error::Data("trend needs at least two exam years".into()));
    }
    report.parameters.insert(
        "year_range".into(),
        format!("{}..={}", years[0], years[years.len() - 1]),
    );

    let mut rows = Vec::new();
    for state in census.rows.keys() {
        let mut slopes: Vec<Option<f64>> = Vec::new();
        for cohort in [Cohort::female(), Cohort::reserved()] {
            let mut points = Vec::new();
            for &year in &years {
                let year_records: Vec<NameRecord> = records
                    .iter()
                    .filter(|r| r.year == Some(year))
                    .cloned()
                    .collect();
                if let Some(share) =
                    population_normalized_share(&year_records, &cohort, census, state)?
                {
                    points.push(TimePoint {
                        period: Period::Year(year),
                        value: share * 100.0,
                        n: year_records.len() as u64,
                    });
                }
            }
            if points.len() >= 2 {
                slopes.push(Some(trend_slope(&TimeSeries { points })?));
            } else {
                slopes.push(None);
            }
        }
        if slopes.iter().all(Option::is_none) {
            continue;
        }
        rows.push(vec![
            state.clone(),
            slopes[0].map(|s| format!("{s:.4}")).unwrap_or_else(|| "absent".into()),
            slopes[1].map(|s| format!("{s:.4}")).unwrap_or_else(|| "absent".into()),
        ]);
    }
    if rows.is_empty() {
        return Err(Error::Data(
            "no state had enough yearly data for a trend".into(),
        ));
    }
    report.tables.push(NamedTable {
        name: "share_trend_slope".into(),
        columns: vec![
            "state".into(),
            "female_slope_pct_per_year".into(),
            "reserved_slope_pct_per_year".into(),
        ],
        rows,
    });
    Ok(report)
}

fn crosstab_table(name: &str, records: &[NameRecord]) -> Result<NamedTable> {
    let tab = crosstab(records)?;
    let mut rows = Vec::new();
    for (g, gender) in ["Female", "Male"].iter().enumerate() {
        for (c, caste) in ["Reserved", "General"].iter().enumerate() {
            rows.push(vec![
                gender.to_string(),
                caste.to_string(),
                format!("{:.2}", tab.percent[g][c]),
                tab.counts[g][c].to_string(),
            ]);
        }
    }
    Ok(NamedTable {
        name: name.to_string(),
        columns: vec![
            "gender".into(),
            "caste".into(),
            "percent".into(),
            "count".into(),
        ],
        rows,
    })
}

/// RQ4 plus the cross-sectional breakups: voice ratios, the
/// message-likelihood comparison between the dominant and the most
/// marginalized cell, the overall gender x caste table, and the
/// oldest/newest/top/bottom 1% slices when the metadata is present.
pub fn voice_report(
    question: &str,
    records: &[NameRecord],
    basis: LikelihoodBasis,
    provenance: &str,
) -> Result<FairnessReport> {
    let mut report = FairnessReport::new(question, provenance);
    report.parameters.insert(
        "likelihood_basis".into(),
        format!("{basis:?}").to_lowercase(),
    );
    report
        .parameters
        .insert("records".into(), records.len().to_string());

    let male = voice(records, &Cohort::male())?;
    let female = voice(records, &Cohort::female())?;
    report
        .diagnostics
        .insert("male_missing_counters".into(), male.missing_counters);
    report
        .diagnostics
        .insert("female_missing_counters".into(), female.missing_counters);
    report.ratios.push(NamedValue {
        name: "male_voice".into(),
        value: male.voice,
    });
    report.ratios.push(NamedValue {
        name: "female_voice".into(),
        value: female.voice,
    });
    report.ratios.push(NamedValue {
        name: "male_to_female_voice".into(),
        value: voice_ratio(records, &Cohort::male(), &Cohort::female())?,
    });
    if has_caste(records) {
        report.ratios.push(NamedValue {
            name: "general_to_reserved_voice".into(),
            value: voice_ratio(records, &Cohort::general(), &Cohort::reserved())?,
        });
        report.ratios.push(NamedValue {
            name: "general_male_to_reserved_female_message_likelihood".into(),
            value: message_likelihood_ratio(
                records,
                &Cohort::cell(crate::corpus::Gender::Male, crate::corpus::Caste::General),
                &Cohort::cell(crate::corpus::Gender::Female, crate::corpus::Caste::Reserved),
                basis,
            )?,
        });
        report.tables.push(crosstab_table("crosstab_overall", records)?);
        let slices = [
            ("crosstab_oldestptc1", SliceSpec::OldestCreated(0.01)),
            ("crosstab_newest_pct1", SliceSpec::NewestCreated(0.01)),
            ("crosstab_top_pct1_followers", SliceSpec::TopFollowers(0.01)),
            (
                "crosstab_bottom_pct1_followers",
                SliceSpec::BottomFollowers(0.01),
            ),
        ];
        for (name, spec) in slices {
            let needs_created = matches!(
                spec,
                SliceSpec::OldestCreated(_) | SliceSpec::NewestCreated(_)
            );
            let available = if needs_created {
                records.iter().all(|r| r.created_at.is_some())
            } else {
                records.iter().all(|r| r.followers.is_some())
            };
            if !available {
                report
                    .diagnostics
                    .insert(format!("{name}_skipped_missing_key"), 1);
                continue;
            }
            let sliced = rank_slice(records, spec)?;
            report.tables.push(crosstab_table(name, &sliced)?);
        }
    }
    Ok(report)
}
