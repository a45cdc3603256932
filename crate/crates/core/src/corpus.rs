//! Manifest and annotation ingestion.
//!
//! Both inputs are line-delimited JSON. A manifest line holds one transcript
//! pair; an annotation line holds the silver entities for one pair id.
//! Offsets are code-point based and are checked against the reference text
//! before any entity is accepted.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::fs;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::align::{EntityAnnotation, EntityCategory};
use crate::metrics::SampleMeta;
use crate::text;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranscriptPair {
    pub id: String,
    pub reference: String,
    pub hypothesis: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub accent: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<String>,
}

impl TranscriptPair {
    pub fn new(id: impl Into<String>, reference: impl Into<String>, hypothesis: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            reference: reference.into(),
            hypothesis: hypothesis.into(),
            accent: None,
            domain: None,
            model: None,
        }
    }

    pub fn meta(&self) -> SampleMeta {
        SampleMeta { model: self.model.clone(), accent: self.accent.clone(), domain: self.domain.clone() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotationSet {
    pub id: String,
    pub entities: Vec<EntityAnnotation>,
}

/// An entity as an annotation source reports it, before category mapping
/// and offset validation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawEntity {
    pub text: String,
    pub category: String,
    pub begin: usize,
    pub end: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub score: Option<f64>,
}

impl From<&EntityAnnotation> for RawEntity {
    fn from(e: &EntityAnnotation) -> Self {
        RawEntity {
            text: e.text.clone(),
            category: e.category.code().to_owned(),
            begin: e.begin,
            end: e.end,
            score: e.score,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct AnnotationLine {
    id: String,
    entities: Vec<RawEntity>,
}

/// External label → category table.
///
/// Starts with the five short codes and the long clinical NER labels;
/// callers may add their own.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CategoryMap {
    labels: HashMap<String, EntityCategory>,
}

impl Default for CategoryMap {
    fn default() -> Self {
        use EntityCategory::*;
        let mut labels = HashMap::new();
        for c in EntityCategory::ALL {
            labels.insert(c.code().to_owned(), c);
        }
        for (label, c) in [
            ("MEDICATION", Medication),
            ("MEDICAL_CONDITION", Condition),
            ("ANATOMY", Anatomy),
            ("TEST_TREATMENT_PROCEDURE", TestTreatmentProcedure),
            ("PROTECTED_HEALTH_INFORMATION", ProtectedHealthInfo),
        ] {
            labels.insert(label.to_owned(), c);
        }
        Self { labels }
    }
}

impl CategoryMap {
    pub fn insert(&mut self, label: impl Into<String>, category: EntityCategory) {
        self.labels.insert(label.into(), category);
    }

    pub fn get(&self, label: &str) -> Option<EntityCategory> {
        self.labels.get(label).copied()
    }

    /// Extends the table from a JSON object of `label → code`.
    pub fn extend_from_file(&mut self, path: &Path) -> Result<(), IngestError> {
        let raw = fs::read_to_string(path).map_err(|source| IngestError::Io { path: path.to_owned(), source })?;
        let table: BTreeMap<String, String> = serde_json::from_str(&raw).map_err(|e| IngestError::Malformed {
            path: path.to_owned(),
            line: e.line(),
            message: e.to_string(),
        })?;
        for (label, code) in table {
            let category = code.parse().map_err(|_| IngestError::UnknownCategory(code.clone()))?;
            self.insert(label, category);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum IssueKind {
    OffsetMismatch { text: String, begin: usize, end: usize, found: Option<String> },
    UnknownCategory(String),
    EmptyEntity(String),
    MissingAnnotations,
    SourceFailure(String),
}

/// One rejected annotation, tied to the sample it belongs to.
#[derive(Debug, Clone, PartialEq)]
pub struct EntityIssue {
    pub id: String,
    pub kind: IssueKind,
}

impl fmt::Display for EntityIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let id = &self.id;
        match &self.kind {
            IssueKind::OffsetMismatch { text, begin, end, found: Some(found) } => {
                write!(f, "sample `{id}`: entity `{text}` at {begin}..{end} does not match reference text `{found}`")
            }
            IssueKind::OffsetMismatch { text, begin, end, found: None } => {
                write!(f, "sample `{id}`: entity `{text}` has offsets {begin}..{end} outside the reference")
            }
            IssueKind::UnknownCategory(label) => {
                write!(f, "sample `{id}`: unknown entity category `{label}`")
            }
            IssueKind::EmptyEntity(text) => {
                write!(f, "sample `{id}`: entity `{text}` is empty after normalization")
            }
            IssueKind::MissingAnnotations => write!(f, "sample `{id}`: no annotations found"),
            IssueKind::SourceFailure(msg) => write!(f, "sample `{id}`: annotation source failed: {msg}"),
        }
    }
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("cannot read {}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("{}:{line}: malformed record: {message}", path.display())]
    Malformed { path: PathBuf, line: usize, message: String },
    #[error("{}:{line}: missing required field `{field}`", path.display())]
    MissingField { path: PathBuf, line: usize, field: &'static str },
    #[error("{}:{line}: sample `{id}` has an empty reference", path.display())]
    EmptyReference { path: PathBuf, line: usize, id: String },
    #[error("duplicate sample ids: {}", .0.join(", "))]
    DuplicateIds(Vec<String>),
    #[error("unknown entity category `{0}`")]
    UnknownCategory(String),
    #[error("annotations reference unknown sample `{0}`")]
    UnknownId(String),
    #[error("{}", render_issues(.0))]
    Rejected(Vec<EntityIssue>),
}

fn render_issues(issues: &[EntityIssue]) -> String {
    let mut out = format!("{} annotation problem(s):", issues.len());
    for issue in issues {
        out.push_str("\n  ");
        out.push_str(&issue.to_string());
    }
    out
}

#[derive(Debug, Clone, Default)]
pub struct IngestOptions {
    pub strict: bool,
    pub categories: CategoryMap,
}

/// Annotation sets keyed by sample id, plus non-fatal diagnostics.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Annotations {
    pub sets: BTreeMap<String, AnnotationSet>,
    pub warnings: Vec<String>,
}

impl Annotations {
    pub fn entities(&self, id: &str) -> &[EntityAnnotation] {
        self.sets.get(id).map(|s| s.entities.as_slice()).unwrap_or(&[])
    }
}

fn open(path: &Path) -> Result<BufReader<fs::File>, IngestError> {
    fs::File::open(path).map(BufReader::new).map_err(|source| IngestError::Io { path: path.to_owned(), source })
}

#[derive(Deserialize)]
struct ManifestLine {
    id: Option<String>,
    reference: Option<String>,
    hypothesis: Option<String>,
    accent: Option<String>,
    domain: Option<String>,
    model: Option<String>,
}

pub fn load_manifest(path: &Path) -> Result<Vec<TranscriptPair>, IngestError> {
    read_manifest(open(path)?, path)
}

/// Parses manifest lines from `reader`; `origin` only labels diagnostics.
pub fn read_manifest(reader: impl BufRead, origin: &Path) -> Result<Vec<TranscriptPair>, IngestError> {
    let mut pairs = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|source| IngestError::Io { path: origin.to_owned(), source })?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: ManifestLine = serde_json::from_str(&line).map_err(|e| IngestError::Malformed {
            path: origin.to_owned(),
            line: line_no,
            message: e.to_string(),
        })?;
        let missing = |field| IngestError::MissingField { path: origin.to_owned(), line: line_no, field };
        let id = rec.id.ok_or_else(|| missing("id"))?;
        let reference = rec.reference.ok_or_else(|| missing("reference"))?;
        let hypothesis = rec.hypothesis.ok_or_else(|| missing("hypothesis"))?;
        if reference.trim().is_empty() {
            return Err(IngestError::EmptyReference { path: origin.to_owned(), line: line_no, id });
        }
        pairs.push(TranscriptPair {
            id,
            reference,
            hypothesis,
            accent: rec.accent,
            domain: rec.domain,
            model: rec.model,
        });
    }
    check_unique(&pairs)?;
    Ok(pairs)
}

fn check_unique(pairs: &[TranscriptPair]) -> Result<(), IngestError> {
    let mut seen = HashSet::new();
    let mut dups: Vec<String> = Vec::new();
    for p in pairs {
        if !seen.insert(p.id.as_str()) && !dups.contains(&p.id) {
            dups.push(p.id.clone());
        }
    }
    if dups.is_empty() {
        Ok(())
    } else {
        Err(IngestError::DuplicateIds(dups))
    }
}

/// Anything that can produce silver entities for a reference transcript.
///
/// `Ok(None)` means the source has nothing for this sample.
pub trait NerSource {
    fn annotate(&self, pair: &TranscriptPair) -> Result<Option<Vec<RawEntity>>, String>;
}

/// Serves annotations from a prepared line-delimited file, keyed by id.
#[derive(Debug, Clone, Default)]
pub struct FileNerSource {
    records: BTreeMap<String, Vec<RawEntity>>,
}

impl FileNerSource {
    pub fn open(path: &Path) -> Result<Self, IngestError> {
        Self::from_reader(open(path)?, path)
    }

    pub fn from_reader(reader: impl BufRead, origin: &Path) -> Result<Self, IngestError> {
        let mut records = BTreeMap::new();
        let mut dups = Vec::new();
        for (idx, line) in reader.lines().enumerate() {
            let line = line.map_err(|source| IngestError::Io { path: origin.to_owned(), source })?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: AnnotationLine = serde_json::from_str(&line).map_err(|e| IngestError::Malformed {
                path: origin.to_owned(),
                line: idx + 1,
                message: e.to_string(),
            })?;
            if records.insert(rec.id.clone(), rec.entities).is_some() {
                dups.push(rec.id);
            }
        }
        if !dups.is_empty() {
            return Err(IngestError::DuplicateIds(dups));
        }
        Ok(Self { records })
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.records.keys().map(String::as_str)
    }
}

impl NerSource for FileNerSource {
    fn annotate(&self, pair: &TranscriptPair) -> Result<Option<Vec<RawEntity>>, String> {
        Ok(self.records.get(&pair.id).cloned())
    }
}

/// Pulls entities for every pair from `source`, maps categories and checks
/// offsets. All per-sample problems are collected before failing.
pub fn fetch_annotations(
    source: &dyn NerSource,
    pairs: &[TranscriptPair],
    options: &IngestOptions,
) -> Result<Annotations, IngestError> {
    let mut out = Annotations::default();
    let mut issues = Vec::new();
    for pair in pairs {
        let raw = match source.annotate(pair) {
            Ok(Some(raw)) => raw,
            Ok(None) if options.strict => {
                issues.push(EntityIssue { id: pair.id.clone(), kind: IssueKind::MissingAnnotations });
                continue;
            }
            Ok(None) => {
                out.warnings.push(format!("sample `{}` has no annotations; treated as entity-free", pair.id));
                Vec::new()
            }
            Err(msg) => {
                issues.push(EntityIssue { id: pair.id.clone(), kind: IssueKind::SourceFailure(msg) });
                continue;
            }
        };
        match validate_entities(pair, raw, &options.categories) {
            Ok(entities) => {
                out.sets.insert(pair.id.clone(), AnnotationSet { id: pair.id.clone(), entities });
            }
            Err(mut found) => issues.append(&mut found),
        }
    }
    if issues.is_empty() {
        Ok(out)
    } else {
        Err(IngestError::Rejected(issues))
    }
}

/// Loads an annotation file and validates it against `manifest`.
///
/// Records for ids absent from the manifest are skipped with a warning, or
/// rejected in strict mode.
pub fn load_annotations(
    path: &Path,
    manifest: &[TranscriptPair],
    options: &IngestOptions,
) -> Result<Annotations, IngestError> {
    annotations_from_source(&FileNerSource::open(path)?, manifest, options)
}

/// Validates a file-backed source against `manifest`, as [`load_annotations`] does.
pub fn annotations_from_source(
    source: &FileNerSource,
    manifest: &[TranscriptPair],
    options: &IngestOptions,
) -> Result<Annotations, IngestError> {
    let known: HashSet<&str> = manifest.iter().map(|p| p.id.as_str()).collect();
    let mut stray = Vec::new();
    for id in source.ids() {
        if !known.contains(id) {
            if options.strict {
                return Err(IngestError::UnknownId(id.to_owned()));
            }
            stray.push(format!("annotations for unknown sample `{id}` skipped"));
        }
    }
    let mut out = fetch_annotations(source, manifest, options)?;
    stray.append(&mut out.warnings);
    out.warnings = stray;
    Ok(out)
}

fn validate_entities(
    pair: &TranscriptPair,
    raw: Vec<RawEntity>,
    categories: &CategoryMap,
) -> Result<Vec<EntityAnnotation>, Vec<EntityIssue>> {
    let chars: Vec<char> = pair.reference.chars().collect();
    let mut issues = Vec::new();
    let mut entities = Vec::with_capacity(raw.len());
    for e in raw {
        let issue = |kind| EntityIssue { id: pair.id.clone(), kind };
        let Some(category) = categories.get(&e.category) else {
            issues.push(issue(IssueKind::UnknownCategory(e.category)));
            continue;
        };
        let found: Option<String> =
            (e.begin <= e.end && e.end <= chars.len()).then(|| chars[e.begin..e.end].iter().collect());
        if found.as_deref() != Some(e.text.as_str()) {
            issues.push(issue(IssueKind::OffsetMismatch { text: e.text, begin: e.begin, end: e.end, found }));
            continue;
        }
        if text::normalize(&e.text).is_empty() {
            issues.push(issue(IssueKind::EmptyEntity(e.text)));
            continue;
        }
        entities.push(EntityAnnotation { text: e.text, category, begin: e.begin, end: e.end, score: e.score });
    }
    if !issues.is_empty() {
        return Err(issues);
    }
    entities.sort_by_key(|e| (e.begin, e.end));
    Ok(entities)
}

fn write_lines<T: Serialize>(path: &Path, records: impl IntoIterator<Item = T>) -> io::Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    for r in records {
        serde_json::to_writer(&mut w, &r)?;
        w.write_all(b"\n")?;
    }
    w.flush()
}

pub fn write_manifest(path: &Path, pairs: &[TranscriptPair]) -> io::Result<()> {
    write_lines(path, pairs)
}

pub fn write_annotations(path: &Path, sets: &[AnnotationSet]) -> io::Result<()> {
    write_lines(
        path,
        sets.iter()
            .map(|s| AnnotationLine { id: s.id.clone(), entities: s.entities.iter().map(RawEntity::from).collect() }),
    )
}
