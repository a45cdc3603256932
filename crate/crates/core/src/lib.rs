//! Evaluation of ASR transcripts on clinical speech.
//!
//! Ground-truth medical entities are aligned to fuzzy n-gram matches in the
//! hypothesis transcript, and the toolkit reports word error rate, medical
//! word and character error rates over the aligned entities, and exact-match
//! entity recall per category.

pub mod align;
pub mod corpus;
pub mod eval;
pub mod fixtures;
pub mod fuzzy;
pub mod metrics;
pub mod reference;
pub mod report;
pub mod selfcheck;
pub mod text;

pub use align::{med_text_align, AlignConfig, AlignError, AlignedEntity, EntityAnnotation, EntityCategory};
pub use corpus::{AnnotationSet, Annotations, IngestError, IngestOptions, TranscriptPair};
pub use eval::{evaluate_corpus, evaluate_sample, GroupKey, SampleResult};
pub use fuzzy::{similarity_ratio, MatchBlock, SimilarityScore};
pub use metrics::{aggregate, edit_distance, CorpusMetrics, EditCounts, RecallCount, SampleMeta, SampleMetrics};
pub use report::{Report, ReportFormat};
pub use text::{ngrams, normalize, tokenize, CandidateSpan, Normalization, Token, TokenSequence};
