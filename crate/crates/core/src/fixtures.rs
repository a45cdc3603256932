//! Golden fixtures and synthetic corpora.
//!
//! The golden set lives under `fixtures/v1/` in the standard manifest and
//! annotation formats, plus an `expected.json` holding the alignments and
//! edit counts computed by an independent generator script. It is compiled
//! into the crate so `selfcheck` works from any directory, and can also be
//! loaded from disk.
//!
//! The synthetic side produces seeded clinical-looking sentences and
//! corrupts them with character- and word-level noise.

use std::collections::BTreeMap;
use std::io::Cursor;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;
use thiserror::Error;

use crate::align::{EntityAnnotation, EntityCategory};
use crate::corpus::{self, AnnotationSet, FileNerSource, IngestError, IngestOptions, TranscriptPair};
use crate::metrics::{EditCounts, RecallCount};
use crate::text::Normalization;

pub const VERSION_DIR: &str = "v1";
pub const MANIFEST_FILE: &str = "manifest.jsonl";
pub const ANNOTATIONS_FILE: &str = "annotations.jsonl";
pub const EXPECTED_FILE: &str = "expected.json";

const EMBEDDED_MANIFEST: &str = include_str!("../fixtures/v1/manifest.jsonl");
const EMBEDDED_ANNOTATIONS: &str = include_str!("../fixtures/v1/annotations.jsonl");
const EMBEDDED_EXPECTED: &str = include_str!("../fixtures/v1/expected.json");

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct ExpectedAlignment {
    pub entity: String,
    pub candidate: Option<String>,
    #[serde(default)]
    pub start_token: Option<usize>,
    #[serde(default)]
    pub length_tokens: Option<usize>,
    pub matched: usize,
    pub total: usize,
    pub exact: bool,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct ExpectedMetrics {
    pub wer: EditCounts,
    pub mwer: EditCounts,
    pub mcer: EditCounts,
    pub recall: BTreeMap<EntityCategory, RecallCount>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct ExpectedSample {
    pub id: String,
    /// Where each group of expected values comes from: `worked_example`
    /// (published text), `derived` (computed by the generator) or `trivial`.
    pub provenance: BTreeMap<String, String>,
    pub alignments: Vec<ExpectedAlignment>,
    pub metrics: ExpectedMetrics,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct FixtureConfig {
    pub threshold: f64,
    pub max_ngram: usize,
    pub normalization: Normalization,
}

#[derive(Debug, Deserialize)]
struct ExpectedFile {
    version: u32,
    config: FixtureConfig,
    samples: Vec<ExpectedSample>,
}

#[derive(Debug, Clone)]
pub struct Fixture {
    pub pair: TranscriptPair,
    pub entities: Vec<EntityAnnotation>,
    pub expected: ExpectedSample,
}

#[derive(Debug, Clone)]
pub struct FixtureSet {
    pub version: u32,
    pub config: FixtureConfig,
    pub fixtures: Vec<Fixture>,
}

#[derive(Debug, Error)]
pub enum FixtureError {
    #[error("fixture file {} is missing", .0.display())]
    Missing(PathBuf),
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error("{}: invalid expected values: {source}", path.display())]
    Expected { path: PathBuf, source: serde_json::Error },
    #[error("expected values name sample `{0}`, which is not in the fixture manifest")]
    UnknownSample(String),
}

impl FixtureSet {
    /// The fixture set compiled into the crate.
    pub fn embedded() -> Result<Self, FixtureError> {
        let origin = Path::new("<embedded>").join(VERSION_DIR);
        Self::parse(EMBEDDED_MANIFEST, EMBEDDED_ANNOTATIONS, EMBEDDED_EXPECTED, &origin)
    }

    /// Loads a fixture directory laid out like `fixtures/v1/`.
    pub fn from_dir(dir: &Path) -> Result<Self, FixtureError> {
        let read = |name: &str| {
            let path = dir.join(name);
            std::fs::read_to_string(&path).map_err(|_| FixtureError::Missing(path))
        };
        let manifest = read(MANIFEST_FILE)?;
        let annotations = read(ANNOTATIONS_FILE)?;
        let expected = read(EXPECTED_FILE)?;
        Self::parse(&manifest, &annotations, &expected, dir)
    }

    fn parse(manifest: &str, annotations: &str, expected: &str, origin: &Path) -> Result<Self, FixtureError> {
        let pairs = corpus::read_manifest(Cursor::new(manifest), &origin.join(MANIFEST_FILE))?;
        let source = FileNerSource::from_reader(Cursor::new(annotations), &origin.join(ANNOTATIONS_FILE))?;
        let options = IngestOptions { strict: true, ..IngestOptions::default() };
        let mut sets = corpus::annotations_from_source(&source, &pairs, &options)?;
        let file: ExpectedFile = serde_json::from_str(expected)
            .map_err(|source| FixtureError::Expected { path: origin.join(EXPECTED_FILE), source })?;

        let mut by_id: BTreeMap<String, TranscriptPair> = pairs.into_iter().map(|p| (p.id.clone(), p)).collect();
        let mut fixtures = Vec::with_capacity(file.samples.len());
        for expected in file.samples {
            let pair = by_id.remove(&expected.id).ok_or_else(|| FixtureError::UnknownSample(expected.id.clone()))?;
            let entities = sets.sets.remove(&expected.id).map(|s| s.entities).unwrap_or_default();
            fixtures.push(Fixture { pair, entities, expected });
        }
        Ok(Self { version: file.version, config: file.config, fixtures })
    }

    pub fn get(&self, id: &str) -> Option<&Fixture> {
        self.fixtures.iter().find(|f| f.pair.id == id)
    }
}

/// Noise operation classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct NoiseOps {
    pub char_sub: bool,
    pub char_del: bool,
    pub word_split: bool,
    pub word_merge: bool,
}

impl NoiseOps {
    pub const ALL: NoiseOps = NoiseOps { char_sub: true, char_del: true, word_split: true, word_merge: true };

    pub const CHAR_SUB: NoiseOps = NoiseOps { char_sub: true, char_del: false, word_split: false, word_merge: false };

    pub const WORD_SPLIT: NoiseOps = NoiseOps { char_sub: false, char_del: false, word_split: true, word_merge: false };

    fn enabled(&self) -> Vec<Op> {
        let mut ops = Vec::with_capacity(4);
        if self.char_sub {
            ops.push(Op::CharSub);
        }
        if self.char_del {
            ops.push(Op::CharDel);
        }
        if self.word_split {
            ops.push(Op::WordSplit);
        }
        if self.word_merge {
            ops.push(Op::WordMerge);
        }
        ops
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Op {
    CharSub,
    CharDel,
    WordSplit,
    WordMerge,
}

/// Which whitespace tokens are eligible for corruption.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NoiseScope {
    #[default]
    AllTokens,
    /// Only tokens overlapping an entity span.
    EntitySpans,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    pub ops: NoiseOps,
    /// Per-token corruption probability in `[0, 1]`.
    pub rate: f64,
    pub scope: NoiseScope,
}

impl NoiseSpec {
    pub fn new(ops: NoiseOps, rate: f64, scope: NoiseScope) -> Self {
        Self { ops, rate, scope }
    }
}

/// Corrupts `reference` into a fake ASR hypothesis.
///
/// Each eligible whitespace token is corrupted with probability `rate` by
/// one operation drawn uniformly from the enabled set. Whitespace between
/// untouched tokens is preserved, so a zero rate returns the reference
/// unchanged.
pub fn synth_noise(reference: &str, entities: &[EntityAnnotation], seed: u64, spec: &NoiseSpec) -> String {
    assert!((0.0..=1.0).contains(&spec.rate), "noise rate must be in [0, 1]");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ops = spec.ops.enabled();
    let chars: Vec<char> = reference.chars().collect();

    let mut chunks: Vec<(usize, usize)> = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        if chars[i].is_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        while i < chars.len() && !chars[i].is_whitespace() {
            i += 1;
        }
        chunks.push((start, i));
    }
    if chunks.is_empty() {
        return reference.to_owned();
    }

    let mut out: String = chars[..chunks[0].0].iter().collect();
    for (n, &(start, end)) in chunks.iter().enumerate() {
        let mut word: Vec<char> = chars[start..end].to_vec();
        let eligible = match spec.scope {
            NoiseScope::AllTokens => true,
            NoiseScope::EntitySpans => entities.iter().any(|e| start < e.end && e.begin < end),
        };
        let mut merge = false;
        if eligible && !ops.is_empty() && rng.gen_bool(spec.rate) {
            match ops[rng.gen_range(0..ops.len())] {
                Op::CharSub => substitute_char(&mut word, &mut rng),
                Op::CharDel => {
                    if word.len() > 1 {
                        word.remove(rng.gen_range(0..word.len()));
                    }
                }
                Op::WordSplit => word = split_word(&word, &mut rng),
                Op::WordMerge => merge = true,
            }
        }
        out.extend(word);
        let gap_end = chunks.get(n + 1).map_or(chars.len(), |c| c.0);
        if !(merge && n + 1 < chunks.len()) {
            out.extend(&chars[end..gap_end]);
        }
    }
    out
}

fn substitute_char(word: &mut [char], rng: &mut ChaCha8Rng) {
    let letters: Vec<usize> = (0..word.len()).filter(|&k| word[k].is_alphabetic()).collect();
    let Some(&pos) = letters.choose(rng) else {
        return;
    };
    let original = word[pos].to_ascii_lowercase();
    let mut pick = b'a' + rng.gen_range(0..25u8);
    if original.is_ascii_lowercase() && pick >= original as u8 {
        pick += 1;
    }
    word[pos] = pick as char;
}

/// Splits into three pieces when possible, two for two-letter words.
fn split_word(word: &[char], rng: &mut ChaCha8Rng) -> Vec<char> {
    let n = word.len();
    let cuts: Vec<usize> = match n {
        0 | 1 => return word.to_vec(),
        2 => vec![1],
        _ => {
            let first = rng.gen_range(1..n - 1);
            vec![first, rng.gen_range(first + 1..n)]
        }
    };
    let mut out = Vec::with_capacity(n + cuts.len());
    for (k, c) in word.iter().enumerate() {
        if cuts.contains(&k) {
            out.push(' ');
        }
        out.push(*c);
    }
    out
}

const MEDICATIONS: &[&str] = &[
    "digoxin",
    "quinidine",
    "disopyramide",
    "ketamine",
    "spironolactone",
    "amoxicillin",
    "metformin",
    "lisinopril",
    "atorvastatin",
    "furosemide",
    "insulin glargine",
    "magnesium sulfate",
    "paracetamol",
    "ceftriaxone",
    "warfarin",
    "heparin",
];

const CONDITIONS: &[&str] = &[
    "paralysis",
    "muscle relaxation",
    "rhonchi",
    "cough",
    "hypertension",
    "diabetes mellitus",
    "pneumonia",
    "atrial fibrillation",
    "anemia",
    "sepsis",
    "renal failure",
    "hypoglycemia",
    "heart failure",
    "malaria",
];

const ANATOMY: &[&str] = &[
    "lungs",
    "left ventricle",
    "adrenal gland",
    "kidney",
    "liver",
    "lower abdomen",
    "brain",
    "right atrium",
    "pancreas",
    "femur",
    "thyroid",
];

const PROCEDURES: &[&str] = &[
    "chest x-ray",
    "blood culture",
    "echocardiogram",
    "analgesic properties",
    "biopsy",
    "complete blood count",
    "ultrasound",
    "dialysis",
    "intubation",
    "lumbar puncture",
];

const HEALTH_INFO: &[&str] =
    &["adebayo okafor", "lagos", "ibadan", "chinwe eze", "kano", "nairobi", "kwame mensah", "accra"];

const FILLER: &[&str] = &[
    "patient",
    "was",
    "given",
    "the",
    "and",
    "with",
    "for",
    "of",
    "noted",
    "presented",
    "history",
    "on",
    "admission",
    "after",
    "started",
    "daily",
    "twice",
    "showed",
    "no",
    "evidence",
    "reports",
    "mild",
    "severe",
    "follow",
    "up",
    "in",
    "clinic",
    "review",
    "plan",
    "continue",
    "today",
    "days",
    "weeks",
    "also",
    "has",
    "been",
    "referred",
    "stable",
    "improved",
    "examination",
    "revealed",
    "without",
    "change",
    "dose",
    "increased",
    "reduced",
    "monitor",
    "closely",
    "discharged",
    "home",
];

const MODELS: &[&str] = &["model-a", "model-b", "model-c"];
const ACCENTS: &[&str] = &["yoruba", "igbo", "hausa", "swahili", "twi", "zulu"];

fn lexicon(category: EntityCategory) -> &'static [&'static str] {
    match category {
        EntityCategory::Medication => MEDICATIONS,
        EntityCategory::Condition => CONDITIONS,
        EntityCategory::Anatomy => ANATOMY,
        EntityCategory::TestTreatmentProcedure => PROCEDURES,
        EntityCategory::ProtectedHealthInfo => HEALTH_INFO,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub samples: usize,
    pub seed: u64,
    /// Approximate words per reference sentence.
    pub words: (usize, usize),
    /// Entities per sentence.
    pub entities: (usize, usize),
    pub noise: NoiseSpec,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            samples: 100,
            seed: 0,
            words: (26, 34),
            entities: (2, 5),
            noise: NoiseSpec::new(NoiseOps::ALL, 0.2, NoiseScope::AllTokens),
        }
    }
}

enum Piece {
    Filler(&'static str),
    Entity(&'static str, EntityCategory),
}

/// Builds a seeded synthetic corpus: reference sentences with silver
/// entities, and hypotheses corrupted according to `spec.noise`.
pub fn synth_corpus(spec: &SynthSpec) -> (Vec<TranscriptPair>, Vec<AnnotationSet>) {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut pairs = Vec::with_capacity(spec.samples);
    let mut sets = Vec::with_capacity(spec.samples);
    for n in 0..spec.samples {
        let target_words = rng.gen_range(spec.words.0..=spec.words.1);
        let entity_count = rng.gen_range(spec.entities.0..=spec.entities.1);
        let mut pieces: Vec<Piece> = Vec::new();
        let mut words = 0;
        for _ in 0..entity_count {
            let category = EntityCategory::ALL[rng.gen_range(0..EntityCategory::ALL.len())];
            let term = *lexicon(category).choose(&mut rng).expect("non-empty lexicon");
            words += term.split(' ').count();
            pieces.push(Piece::Entity(term, category));
        }
        while words < target_words {
            pieces.push(Piece::Filler(FILLER.choose(&mut rng).expect("non-empty filler")));
            words += 1;
        }
        pieces.shuffle(&mut rng);

        let mut reference = String::new();
        let mut cursor = 0usize;
        let mut entities = Vec::with_capacity(entity_count);
        for (k, piece) in pieces.iter().enumerate() {
            if k > 0 {
                reference.push(' ');
                cursor += 1;
            }
            match piece {
                Piece::Filler(w) => {
                    reference.push_str(w);
                    cursor += w.chars().count();
                    if rng.gen_bool(0.08) {
                        reference.push(',');
                        cursor += 1;
                    }
                }
                Piece::Entity(term, category) => {
                    let len = term.chars().count();
                    entities.push(EntityAnnotation::new(*term, *category, cursor, cursor + len));
                    reference.push_str(term);
                    cursor += len;
                }
            }
        }
        reference.push('.');

        let noise_seed: u64 = rng.gen();
        let hypothesis = synth_noise(&reference, &entities, noise_seed, &spec.noise);
        let id = format!("syn-{:06}", n);
        let mut pair = TranscriptPair::new(id.clone(), reference, hypothesis);
        pair.model = Some(MODELS[rng.gen_range(0..MODELS.len())].to_owned());
        pair.accent = Some(ACCENTS[rng.gen_range(0..ACCENTS.len())].to_owned());
        pair.domain = Some("clinical".to_owned());
        pairs.push(pair);
        sets.push(AnnotationSet { id, entities });
    }
    (pairs, sets)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::text::tokenize;

    #[test]
    fn embedded_set_loads() {
        let set = FixtureSet::embedded().unwrap();
        assert_eq!(set.version, 1);
        assert_eq!(set.config.threshold, 0.5);
        assert_eq!(set.config.max_ngram, 3);
        let digoxin = set.get("digoxin-interaction").unwrap();
        assert_eq!(digoxin.entities.len(), 3);
        assert_eq!(digoxin.entities[2].begin, 77);
        assert_eq!(digoxin.expected.provenance["alignments"], "worked_example");
    }

    #[test]
    fn missing_fixture_file_is_named() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join(MANIFEST_FILE), EMBEDDED_MANIFEST).unwrap();
        let err = FixtureSet::from_dir(dir.path()).unwrap_err();
        assert!(matches!(&err, FixtureError::Missing(p) if p.ends_with(ANNOTATIONS_FILE)));
        assert!(err.to_string().contains(ANNOTATIONS_FILE));
    }

    #[test]
    fn zero_rate_is_identity() {
        let spec = NoiseSpec::new(NoiseOps::ALL, 0.0, NoiseScope::AllTokens);
        let text = "  lungs clear,  but dim.\tcough ";
        assert_eq!(synth_noise(text, &[], 9, &spec), text);
    }

    #[test]
    fn fixed_seed_is_deterministic() {
        let spec = NoiseSpec::new(NoiseOps::ALL, 0.3, NoiseScope::AllTokens);
        let text = "unlike quinidine, disopyramide does not increase the plasma concentration of digoxin";
        let a = synth_noise(text, &[], 42, &spec);
        assert_eq!(a, synth_noise(text, &[], 42, &spec));
        assert_ne!(a, text);
    }

    #[test]
    fn word_split_makes_three_pieces() {
        let spec = NoiseSpec::new(NoiseOps::WORD_SPLIT, 1.0, NoiseScope::AllTokens);
        for seed in 0..50 {
            let out = synth_noise("spironolactone", &[], seed, &spec);
            let parts: Vec<_> = out.split(' ').collect();
            assert_eq!(parts.len(), 3, "{out}");
            assert!(parts.iter().all(|p| !p.is_empty()));
            assert_eq!(parts.concat(), "spironolactone");
        }
    }

    #[test]
    fn char_sub_changes_exactly_one_letter() {
        let spec = NoiseSpec::new(NoiseOps::CHAR_SUB, 1.0, NoiseScope::AllTokens);
        for seed in 0..50 {
            let out = synth_noise("digoxin", &[], seed, &spec);
            let diff = out.chars().zip("digoxin".chars()).filter(|(a, b)| a != b).count();
            assert_eq!((out.chars().count(), diff), (7, 1), "{out}");
        }
    }

    #[test]
    fn entity_scope_leaves_other_tokens_alone() {
        let reference = "patient given digoxin daily";
        let e = [EntityAnnotation::new("digoxin", EntityCategory::Medication, 14, 21)];
        let spec = NoiseSpec::new(NoiseOps::CHAR_SUB, 1.0, NoiseScope::EntitySpans);
        let out = synth_noise(reference, &e, 3, &spec);
        let words: Vec<_> = out.split(' ').collect();
        assert_eq!((words[0], words[1], words[3]), ("patient", "given", "daily"));
        assert_ne!(words[2], "digoxin");
    }

    #[test]
    fn word_merge_drops_one_separator() {
        let spec = NoiseSpec::new(NoiseOps { word_merge: true, ..NoiseOps::default() }, 1.0, NoiseScope::AllTokens);
        assert_eq!(synth_noise("a b c", &[], 1, &spec), "abc");
    }

    #[test]
    fn synthetic_offsets_are_valid() {
        let spec = SynthSpec { samples: 50, seed: 11, ..SynthSpec::default() };
        let (pairs, sets) = synth_corpus(&spec);
        assert_eq!(pairs.len(), 50);
        for (p, s) in pairs.iter().zip(&sets) {
            let chars: Vec<char> = p.reference.chars().collect();
            assert!(!s.entities.is_empty());
            for e in &s.entities {
                assert_eq!(chars[e.begin..e.end].iter().collect::<String>(), e.text);
            }
            let n = tokenize(&p.reference).len();
            assert!((26..=40).contains(&n), "{n}");
        }
        assert_eq!(synth_corpus(&spec), (pairs, sets));
    }
}
