//! Report rendering and persistence.
//!
//! Three renderings share one data model: JSON carries every count and rate,
//! CSV has one row per sample plus a corpus summary row, and the table is a
//! fixed-width grid with WER, M-WER, M-CER and recall per category. Rates
//! are always written with four decimal places, rounded half to even.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::align::{AlignConfig, EntityCategory};
use crate::eval::Groups;
use crate::metrics::{CorpusMetrics, EditCounts, MacroAccumulator, Ratio, RecallCount, SampleMetrics};
use crate::text::Normalization;

const PLACES: u32 = 4;

/// A rate rendered with exactly four decimals.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Rate(pub f64);

impl Rate {
    pub fn from_ratio(r: Ratio) -> Option<Rate> {
        r.rounded(PLACES).map(Rate)
    }

    fn from_mean(acc: &MacroAccumulator) -> Option<Rate> {
        acc.mean().map(|m| Rate(format!("{m:.4}").parse().expect("decimal")))
    }
}

impl fmt::Display for Rate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.4}", self.0)
    }
}

impl Serialize for Rate {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let raw = serde_json::value::RawValue::from_string(self.to_string()).map_err(serde::ser::Error::custom)?;
        raw.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Rate {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        f64::deserialize(d).map(Rate)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CountsRecord {
    pub substitutions: u64,
    pub insertions: u64,
    pub deletions: u64,
    pub hits: u64,
    pub ref_len: u64,
    pub rate: Option<Rate>,
}

impl From<&EditCounts> for CountsRecord {
    fn from(c: &EditCounts) -> Self {
        Self {
            substitutions: c.substitutions,
            insertions: c.insertions,
            deletions: c.deletions,
            hits: c.hits,
            ref_len: c.ref_len,
            rate: Rate::from_ratio(c.ratio()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RecallRecord {
    pub recalled: u64,
    pub total: u64,
    pub rate: Option<Rate>,
}

impl From<&RecallCount> for RecallRecord {
    fn from(r: &RecallCount) -> Self {
        Self { recalled: r.recalled, total: r.total, rate: Rate::from_ratio(r.ratio()) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MacroRecord {
    pub wer: Option<Rate>,
    pub mwer: Option<Rate>,
    pub mcer: Option<Rate>,
    pub recall: BTreeMap<EntityCategory, Option<Rate>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusRecord {
    pub samples: u64,
    pub skipped_zero_entity: u64,
    pub skipped_zero_word: u64,
    pub reused_candidates: u64,
    pub wer: CountsRecord,
    pub mwer: CountsRecord,
    pub mcer: CountsRecord,
    /// Micro recall; every category is listed, empty ones with a null rate.
    pub recall: BTreeMap<EntityCategory, RecallRecord>,
    #[serde(rename = "macro")]
    pub macro_: MacroRecord,
}

impl From<&CorpusMetrics> for CorpusRecord {
    fn from(c: &CorpusMetrics) -> Self {
        let recall = EntityCategory::ALL
            .iter()
            .map(|cat| (*cat, RecallRecord::from(&c.recall.get(cat).copied().unwrap_or_default())))
            .collect();
        let macro_recall =
            EntityCategory::ALL.iter().map(|cat| (*cat, c.macro_.recall.get(cat).and_then(Rate::from_mean))).collect();
        Self {
            samples: c.samples,
            skipped_zero_entity: c.skipped_zero_entity,
            skipped_zero_word: c.skipped_zero_word,
            reused_candidates: c.reused_candidates,
            wer: (&c.wer).into(),
            mwer: (&c.mwer).into(),
            mcer: (&c.mcer).into(),
            recall,
            macro_: MacroRecord {
                wer: Rate::from_mean(&c.macro_.wer),
                mwer: Rate::from_mean(&c.macro_.mwer),
                mcer: Rate::from_mean(&c.macro_.mcer),
                recall: macro_recall,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub accent: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<String>,
    pub entities: u64,
    pub reused_candidates: u64,
    pub wer: CountsRecord,
    pub mwer: CountsRecord,
    pub mcer: CountsRecord,
    pub recall: BTreeMap<EntityCategory, RecallRecord>,
}

impl From<&SampleMetrics> for SampleRecord {
    fn from(s: &SampleMetrics) -> Self {
        Self {
            id: s.id.clone(),
            model: s.meta.model.clone(),
            accent: s.meta.accent.clone(),
            domain: s.meta.domain.clone(),
            entities: s.entities,
            reused_candidates: s.reused_candidates,
            wer: (&s.wer).into(),
            mwer: (&s.mwer).into(),
            mcer: (&s.mcer).into(),
            recall: s.recall.iter().map(|(k, v)| (*k, v.into())).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportConfig {
    pub threshold: f64,
    pub max_ngram: usize,
    pub normalization: Normalization,
}

impl From<&AlignConfig> for ReportConfig {
    fn from(c: &AlignConfig) -> Self {
        Self { threshold: c.threshold, max_ngram: c.max_ngram, normalization: c.normalization }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub config: ReportConfig,
    pub corpus: CorpusRecord,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub groups: BTreeMap<String, BTreeMap<String, CorpusRecord>>,
    pub per_sample: Vec<SampleRecord>,
}

impl Report {
    pub fn build<'a>(
        config: &AlignConfig,
        corpus: &CorpusMetrics,
        groups: &Groups,
        per_sample: impl IntoIterator<Item = &'a SampleMetrics>,
    ) -> Self {
        Self {
            config: config.into(),
            corpus: corpus.into(),
            groups: groups
                .iter()
                .map(|(k, g)| (k.clone(), g.iter().map(|(v, c)| (v.clone(), c.into())).collect()))
                .collect(),
            per_sample: per_sample.into_iter().map(SampleRecord::from).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReportFormat {
    #[default]
    Json,
    Csv,
    Table,
}

impl FromStr for ReportFormat {
    type Err = ReportError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            "table" => Ok(ReportFormat::Table),
            other => Err(ReportError::UnknownFormat(other.to_owned())),
        }
    }
}

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("unknown report format `{0}` (expected json, csv or table)")]
    UnknownFormat(String),
    #[error("cannot write {}: {source}", path.display())]
    Write { path: PathBuf, source: io::Error },
    #[error("cannot read {}: {source}", path.display())]
    Read { path: PathBuf, source: io::Error },
    #[error("{}: invalid report: {source}", path.display())]
    Parse { path: PathBuf, source: serde_json::Error },
    #[error("csv encoding failed: {0}")]
    Csv(#[from] csv::Error),
}

pub fn render(report: &Report, format: ReportFormat) -> Result<String, ReportError> {
    match format {
        ReportFormat::Json => {
            let mut out = serde_json::to_string_pretty(report).expect("report serializes");
            out.push('\n');
            Ok(out)
        }
        ReportFormat::Csv => render_csv(report),
        ReportFormat::Table => Ok(render_table(report)),
    }
}

pub fn write_report(report: &Report, format: ReportFormat, path: &Path) -> Result<(), ReportError> {
    let body = render(report, format)?;
    fs::write(path, body).map_err(|source| ReportError::Write { path: path.to_owned(), source })
}

pub fn read_report(path: &Path) -> Result<Report, ReportError> {
    let raw = fs::read_to_string(path).map_err(|source| ReportError::Read { path: path.to_owned(), source })?;
    serde_json::from_str(&raw).map_err(|source| ReportError::Parse { path: path.to_owned(), source })
}

fn cell(rate: Option<Rate>) -> String {
    rate.map(|r| r.to_string()).unwrap_or_default()
}

fn counts_cells(c: &CountsRecord) -> [String; 6] {
    [
        c.substitutions.to_string(),
        c.insertions.to_string(),
        c.deletions.to_string(),
        c.hits.to_string(),
        c.ref_len.to_string(),
        cell(c.rate),
    ]
}

fn recall_cells(recall: &BTreeMap<EntityCategory, RecallRecord>) -> Vec<String> {
    let mut out = Vec::with_capacity(15);
    for cat in EntityCategory::ALL {
        let r = recall.get(&cat).copied().unwrap_or(RecallRecord { recalled: 0, total: 0, rate: None });
        out.extend([r.recalled.to_string(), r.total.to_string(), cell(r.rate)]);
    }
    out
}

const SUMMARY_ID: &str = "ALL";

fn render_csv(report: &Report) -> Result<String, ReportError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<String> = ["id", "model", "accent", "domain", "entities"].map(String::from).to_vec();
    for metric in ["wer", "mwer", "mcer"] {
        for field in ["sub", "ins", "del", "hits", "ref_len", "rate"] {
            header.push(format!("{metric}_{field}"));
        }
    }
    for cat in EntityCategory::ALL {
        for field in ["recalled", "total", "recall"] {
            header.push(format!("{cat}_{field}"));
        }
    }
    w.write_record(&header)?;

    for s in &report.per_sample {
        let mut row = vec![
            s.id.clone(),
            s.model.clone().unwrap_or_default(),
            s.accent.clone().unwrap_or_default(),
            s.domain.clone().unwrap_or_default(),
            s.entities.to_string(),
        ];
        for c in [&s.wer, &s.mwer, &s.mcer] {
            row.extend(counts_cells(c));
        }
        row.extend(recall_cells(&s.recall));
        w.write_record(&row)?;
    }

    let c = &report.corpus;
    let entities: u64 = c.recall.values().map(|r| r.total).sum();
    let mut row = vec![SUMMARY_ID.to_owned(), String::new(), String::new(), String::new(), entities.to_string()];
    for counts in [&c.wer, &c.mwer, &c.mcer] {
        row.extend(counts_cells(counts));
    }
    row.extend(recall_cells(&c.recall));
    w.write_record(&row)?;

    let bytes = w.into_inner().map_err(|e| ReportError::Csv(e.into_error().into()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Column headers of the table view, in display order.
pub const TABLE_COLUMNS: [&str; 10] = ["Group", "Samples", "WER", "M-WER", "M-CER", "MED", "ANA", "COND", "TTP", "PHI"];

fn table_row(label: &str, c: &CorpusRecord) -> Vec<String> {
    let dash = |r: Option<Rate>| r.map(|r| r.to_string()).unwrap_or_else(|| "-".into());
    let mut row = vec![label.to_owned(), c.samples.to_string(), dash(c.wer.rate), dash(c.mwer.rate), dash(c.mcer.rate)];
    for cat in EntityCategory::ALL {
        row.push(dash(c.recall.get(&cat).and_then(|r| r.rate)));
    }
    row
}

fn render_table(report: &Report) -> String {
    let mut rows = vec![TABLE_COLUMNS.map(String::from).to_vec()];
    rows.push(table_row("all", &report.corpus));
    for (key, groups) in &report.groups {
        for (value, c) in groups {
            rows.push(table_row(&format!("{key}={value}"), c));
        }
    }
    let widths: Vec<usize> =
        (0..TABLE_COLUMNS.len()).map(|i| rows.iter().map(|r| r[i].chars().count()).max().unwrap_or(0)).collect();

    let mut out = String::new();
    for (n, row) in rows.iter().enumerate() {
        for (i, value) in row.iter().enumerate() {
            if i == 0 {
                let _ = write!(out, "{value:<w$}", w = widths[i]);
            } else {
                let _ = write!(out, "  {value:>w$}", w = widths[i]);
            }
        }
        out.push('\n');
        if n == 0 {
            let total = widths.iter().sum::<usize>() + 2 * (widths.len() - 1);
            out.push_str(&"-".repeat(total));
            out.push('\n');
        }
    }
    let _ = writeln!(
        out,
        "\nsamples without entities: {}; samples without reference words: {}; reused candidates: {}",
        report.corpus.skipped_zero_entity, report.corpus.skipped_zero_word, report.corpus.reused_candidates
    );
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::{aggregate, SampleMeta};

    fn sample(id: &str, model: &str) -> SampleMetrics {
        let wer = EditCounts { substitutions: 1, insertions: 1, deletions: 0, hits: 2, ref_len: 3 };
        let mut recall = BTreeMap::new();
        recall.insert(EntityCategory::Medication, RecallCount { recalled: 1, total: 3 });
        SampleMetrics {
            id: id.into(),
            meta: SampleMeta { model: Some(model.into()), ..SampleMeta::default() },
            wer,
            mwer: wer,
            mcer: EditCounts { substitutions: 8, hits: 22, ref_len: 30, ..EditCounts::default() },
            recall,
            entities: 3,
            reused_candidates: 0,
        }
    }

    fn report(samples: &[SampleMetrics]) -> Report {
        let corpus = aggregate(samples);
        let groups = crate::eval::group_metrics(samples.iter(), &[crate::eval::GroupKey::Model]);
        Report::build(&AlignConfig::default(), &corpus, &groups, samples)
    }

    #[test]
    fn json_has_fixed_decimals_and_schema_keys() {
        let json = render(&report(&[sample("s1", "m")]), ReportFormat::Json).unwrap();
        assert!(json.contains("\"rate\": 0.6667"), "{json}");
        assert!(json.contains("\"rate\": 0.2667"));
        assert!(json.contains("\"threshold\": 0.5"));
        assert!(json.contains("\"max_ngram\": 3"));
        assert!(json.contains("\"normalization\": \"standard\""));
        assert!(json.contains("\"skipped_zero_entity\": 0"));
        assert!(json.contains("\"PHI\": {"));
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(v["corpus"]["samples"], 1);
        assert_eq!(v["corpus"]["recall"]["MED"]["recalled"], 1);
        assert!(v["corpus"]["recall"]["ANA"]["rate"].is_null());
        assert_eq!(v["per_sample"][0]["id"], "s1");
    }

    #[test]
    fn rates_are_padded_to_four_places() {
        let mut s = sample("s1", "m");
        s.wer = EditCounts { substitutions: 1, hits: 1, ref_len: 2, ..EditCounts::default() };
        let json = render(&report(&[s]), ReportFormat::Json).unwrap();
        assert!(json.contains("\"rate\": 0.5000"), "{json}");
    }

    #[test]
    fn json_round_trip_is_byte_identical() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.json");
        let r = report(&[sample("s1", "a"), sample("s2", "b")]);
        write_report(&r, ReportFormat::Json, &path).unwrap();
        let first = fs::read_to_string(&path).unwrap();
        let back = read_report(&path).unwrap();
        assert_eq!(back, r);
        write_report(&back, ReportFormat::Json, &path).unwrap();
        assert_eq!(fs::read_to_string(&path).unwrap(), first);
    }

    #[test]
    fn csv_has_sample_rows_and_summary() {
        let csv = render(&report(&[sample("s1", "a"), sample("s2", "b")]), ReportFormat::Csv).unwrap();
        let lines: Vec<_> = csv.lines().collect();
        assert_eq!(lines.len(), 4);
        assert!(lines[0].starts_with("id,model,accent,domain,entities,wer_sub"));
        assert!(lines[1].starts_with("s1,a,,,3,1,1,0,2,3,0.6667"));
        assert!(lines[3].starts_with("ALL,,,,6,2,2,0,4,6,0.6667"));
    }

    #[test]
    fn table_mirrors_column_order() {
        let table = render(&report(&[sample("s1", "a")]), ReportFormat::Table).unwrap();
        let header = table.lines().next().unwrap();
        let cols: Vec<_> = header.split_whitespace().collect();
        assert_eq!(cols, TABLE_COLUMNS);
        assert!(table.contains("model=a"));
        assert!(table.lines().nth(2).unwrap().starts_with("all"));
    }

    #[test]
    fn empty_corpus_is_a_valid_report() {
        let r = report(&[]);
        assert_eq!(r.corpus.samples, 0);
        assert!(r.corpus.wer.rate.is_none());
        for format in [ReportFormat::Json, ReportFormat::Csv, ReportFormat::Table] {
            assert!(!render(&r, format).unwrap().is_empty());
        }
    }

    #[test]
    fn unknown_format_and_unwritable_path() {
        assert!(matches!("xml".parse::<ReportFormat>(), Err(ReportError::UnknownFormat(_))));
        let err = write_report(&report(&[]), ReportFormat::Json, Path::new("/nonexistent/dir/r.json")).unwrap_err();
        assert!(err.to_string().contains("/nonexistent/dir/r.json"));
    }
}
