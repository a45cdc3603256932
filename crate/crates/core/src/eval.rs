//! Per-sample evaluation and corpus reduction.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use thiserror::Error;

use crate::align::{self, AlignConfig, AlignError, AlignedEntity};
use crate::corpus::{Annotations, TranscriptPair};
use crate::metrics::{self, CorpusMetrics, SampleMetrics};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error(transparent)]
    Config(AlignError),
    #[error("sample `{id}`: {source}")]
    Align { id: String, source: AlignError },
    #[error("cannot start worker pool: {0}")]
    Pool(String),
}

#[derive(Debug, Clone)]
pub struct SampleResult {
    pub metrics: SampleMetrics,
    pub aligned: Vec<AlignedEntity>,
}

pub fn evaluate_sample(
    pair: &TranscriptPair,
    entities: &[align::EntityAnnotation],
    config: &AlignConfig,
) -> Result<SampleResult, AlignError> {
    let aligned = align::med_text_align(entities, &pair.hypothesis, config)?;
    let wer = metrics::wer_with(&pair.reference, &pair.hypothesis, config.normalization);
    Ok(SampleResult { metrics: SampleMetrics::from_alignment(pair.id.clone(), pair.meta(), wer, &aligned), aligned })
}

/// Evaluates every pair on a pool of `workers` threads. Results come back in
/// manifest order whatever the pool size.
pub fn evaluate_corpus(
    pairs: &[TranscriptPair],
    annotations: &Annotations,
    config: &AlignConfig,
    workers: usize,
) -> Result<Vec<SampleResult>, EvalError> {
    config.validate().map_err(EvalError::Config)?;
    let one = |p: &TranscriptPair| {
        evaluate_sample(p, annotations.entities(&p.id), config)
            .map_err(|source| EvalError::Align { id: p.id.clone(), source })
    };
    if workers <= 1 {
        return pairs.iter().map(one).collect();
    }
    let pool =
        rayon::ThreadPoolBuilder::new().num_threads(workers).build().map_err(|e| EvalError::Pool(e.to_string()))?;
    pool.install(|| pairs.par_iter().map(one).collect())
}

/// Manifest metadata field used to split the corpus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GroupKey {
    Model,
    Accent,
    Domain,
}

impl GroupKey {
    pub fn as_str(&self) -> &'static str {
        match self {
            GroupKey::Model => "model",
            GroupKey::Accent => "accent",
            GroupKey::Domain => "domain",
        }
    }

    fn value<'a>(&self, s: &'a SampleMetrics) -> Option<&'a str> {
        match self {
            GroupKey::Model => s.meta.model.as_deref(),
            GroupKey::Accent => s.meta.accent.as_deref(),
            GroupKey::Domain => s.meta.domain.as_deref(),
        }
    }
}

impl fmt::Display for GroupKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for GroupKey {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "model" => Ok(GroupKey::Model),
            "accent" => Ok(GroupKey::Accent),
            "domain" => Ok(GroupKey::Domain),
            other => Err(format!("unknown group key `{other}` (expected model, accent or domain)")),
        }
    }
}

/// Label used for samples that lack the grouping field.
pub const UNLABELED: &str = "(none)";

pub type Groups = BTreeMap<String, BTreeMap<String, CorpusMetrics>>;

pub fn group_metrics<'a>(samples: impl IntoIterator<Item = &'a SampleMetrics> + Clone, keys: &[GroupKey]) -> Groups {
    let mut out = Groups::new();
    for key in keys {
        let slot = out.entry(key.as_str().to_owned()).or_default();
        for s in samples.clone() {
            let label = key.value(s).unwrap_or(UNLABELED).to_owned();
            slot.entry(label).or_default().absorb(s);
        }
    }
    out
}
