//! Alignment of ground-truth medical entities to hypothesis n-grams.
//!
//! Every entity is scored against every unigram, bigram and trigram of the
//! tokenized hypothesis; the best candidate at or above the threshold wins.
//! Candidates are not reserved, so one hypothesis span may serve several
//! entities.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fuzzy::{self, SimilarityScore};
use crate::text::{self, CandidateSpan, Normalization, Span, DEFAULT_MAX_NGRAM};

pub const DEFAULT_THRESHOLD: f64 = 0.5;

/// The five entity categories, in report column order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EntityCategory {
    #[serde(rename = "MED")]
    Medication,
    #[serde(rename = "ANA")]
    Anatomy,
    #[serde(rename = "COND")]
    Condition,
    #[serde(rename = "TTP")]
    TestTreatmentProcedure,
    #[serde(rename = "PHI")]
    ProtectedHealthInfo,
}

impl EntityCategory {
    pub const ALL: [EntityCategory; 5] = [
        EntityCategory::Medication,
        EntityCategory::Anatomy,
        EntityCategory::Condition,
        EntityCategory::TestTreatmentProcedure,
        EntityCategory::ProtectedHealthInfo,
    ];

    pub fn code(&self) -> &'static str {
        match self {
            EntityCategory::Medication => "MED",
            EntityCategory::Anatomy => "ANA",
            EntityCategory::Condition => "COND",
            EntityCategory::TestTreatmentProcedure => "TTP",
            EntityCategory::ProtectedHealthInfo => "PHI",
        }
    }
}

impl fmt::Display for EntityCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for EntityCategory {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        EntityCategory::ALL.into_iter().find(|c| c.code() == s).ok_or_else(|| format!("unknown entity category `{s}`"))
    }
}

/// One silver ground-truth entity with code-point offsets into the reference.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntityAnnotation {
    pub text: String,
    pub category: EntityCategory,
    pub begin: usize,
    pub end: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub score: Option<f64>,
}

impl EntityAnnotation {
    pub fn new(text: impl Into<String>, category: EntityCategory, begin: usize, end: usize) -> Self {
        Self { text: text.into(), category, begin, end, score: None }
    }

    pub fn span(&self) -> Span {
        Span::new(self.begin, self.end)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlignedEntity {
    pub entity: EntityAnnotation,
    /// Normalized entity text the candidates were scored against.
    pub normalized: String,
    pub candidate: Option<CandidateSpan>,
    pub score: SimilarityScore,
    pub exact: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlignConfig {
    pub threshold: f64,
    pub max_ngram: usize,
    pub normalization: Normalization,
}

impl Default for AlignConfig {
    fn default() -> Self {
        Self { threshold: DEFAULT_THRESHOLD, max_ngram: DEFAULT_MAX_NGRAM, normalization: Normalization::Standard }
    }
}

impl AlignConfig {
    pub fn validate(&self) -> Result<(), AlignError> {
        if !(self.threshold > 0.0 && self.threshold <= 1.0) {
            return Err(AlignError::Threshold(self.threshold));
        }
        if self.max_ngram == 0 {
            return Err(AlignError::MaxNgram);
        }
        Ok(())
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum AlignError {
    #[error("invalid argument: threshold must be in (0, 1], got {0}")]
    Threshold(f64),
    #[error("invalid argument: max n-gram order must be at least 1")]
    MaxNgram,
    #[error("invalid argument: entities must be sorted by begin offset (`{0}` is out of order)")]
    Unsorted(String),
}

struct Candidate {
    span: CandidateSpan,
    chars: Vec<char>,
}

/// Aligns each entity, in input order, to its closest hypothesis n-gram.
pub fn med_text_align(
    entities: &[EntityAnnotation],
    hypothesis: &str,
    config: &AlignConfig,
) -> Result<Vec<AlignedEntity>, AlignError> {
    config.validate()?;
    if let Some(w) = entities.windows(2).find(|w| w[1].begin < w[0].begin) {
        return Err(AlignError::Unsorted(w[1].text.clone()));
    }

    let seq = config.normalization.tokenize(hypothesis);
    let candidates: Vec<Candidate> = text::ngrams(&seq, config.max_ngram)
        .into_iter()
        .map(|span| Candidate { chars: span.normalized.chars().collect(), span })
        .collect();

    Ok(entities.iter().map(|entity| align_one(entity, &candidates, config)).collect())
}

fn align_one(entity: &EntityAnnotation, candidates: &[Candidate], config: &AlignConfig) -> AlignedEntity {
    let normalized = config.normalization.normalize(&entity.text);
    let target: Vec<char> = normalized.chars().collect();

    let mut best: Option<(&Candidate, SimilarityScore)> = None;
    for cand in candidates {
        let total = target.len() + cand.chars.len();
        let bound = SimilarityScore::new(fuzzy::matched_upper_bound(&target, &cand.chars), total);
        if !bound.meets(config.threshold) || best.is_some_and(|(_, s)| bound < s) {
            continue;
        }
        let score = fuzzy::similarity_chars(&target, &cand.chars);
        if !score.meets(config.threshold) {
            continue;
        }
        let better = match best {
            None => true,
            Some((b, s)) => {
                score > s
                    || (score == s
                        && (cand.span.length_tokens, cand.span.start_token)
                            < (b.span.length_tokens, b.span.start_token))
            }
        };
        if better {
            best = Some((cand, score));
        }
    }

    match best {
        Some((cand, score)) => AlignedEntity {
            exact: cand.span.normalized == normalized,
            entity: entity.clone(),
            normalized,
            candidate: Some(cand.span.clone()),
            score,
        },
        None => AlignedEntity {
            entity: entity.clone(),
            normalized,
            candidate: None,
            score: SimilarityScore::ZERO,
            exact: false,
        },
    }
}

/// Space-joined normalized entity texts, in order.
pub fn ground_truth_sequence(aligned: &[AlignedEntity]) -> String {
    join_nonempty(aligned.iter().map(|a| a.normalized.as_str()))
}

/// Space-joined normalized candidates, in order; unmatched entities
/// contribute nothing.
pub fn recovered_sequence(aligned: &[AlignedEntity]) -> String {
    join_nonempty(aligned.iter().filter_map(|a| a.candidate.as_ref().map(|c| c.normalized.as_str())))
}

fn join_nonempty<'a>(parts: impl Iterator<Item = &'a str>) -> String {
    let mut out = String::new();
    for p in parts.filter(|p| !p.is_empty()) {
        if !out.is_empty() {
            out.push(' ');
        }
        out.push_str(p);
    }
    out
}

/// Number of entities whose candidate span was already assigned to an
/// earlier entity in the same sample.
pub fn reused_candidates(aligned: &[AlignedEntity]) -> usize {
    let mut seen: Vec<(usize, usize)> = Vec::new();
    let mut reused = 0;
    for c in aligned.iter().filter_map(|a| a.candidate.as_ref()) {
        let key = (c.start_token, c.length_tokens);
        if seen.contains(&key) {
            reused += 1;
        } else {
            seen.push(key);
        }
    }
    reused
}
