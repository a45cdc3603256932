//! Normalization, tokenization and n-gram candidate generation.
//!
//! Tokens keep two views of the same word: the surface form exactly as it
//! appears in the source text, and a normalized form used for matching and
//! scoring. Spans are half-open intervals of Unicode scalar values (code
//! points), not bytes, so they line up with entity annotation offsets.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use unicode_properties::{GeneralCategoryGroup, UnicodeGeneralCategory};

/// Default n-gram order: unigrams, bigrams and trigrams.
pub const DEFAULT_MAX_NGRAM: usize = 3;

/// Half-open code-point interval `[begin, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Span {
    pub begin: usize,
    pub end: usize,
}

impl Span {
    pub fn new(begin: usize, end: usize) -> Self {
        debug_assert!(begin <= end);
        Self { begin, end }
    }

    pub fn len(&self) -> usize {
        self.end - self.begin
    }

    pub fn is_empty(&self) -> bool {
        self.begin == self.end
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub surface: String,
    pub normalized: String,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenSequence {
    pub source: String,
    pub tokens: Vec<Token>,
}

impl TokenSequence {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn normalized_words(&self) -> impl Iterator<Item = &str> {
        self.tokens.iter().map(|t| t.normalized.as_str())
    }
}

/// A contiguous run of hypothesis tokens considered as a match candidate.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidateSpan {
    pub start_token: usize,
    pub length_tokens: usize,
    /// Token surfaces joined by a single space.
    pub surface: String,
    /// Normalized tokens joined by a single space.
    pub normalized: String,
}

impl CandidateSpan {
    pub fn end_token(&self) -> usize {
        self.start_token + self.length_tokens
    }
}

/// How text is canonicalized before matching and scoring.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Normalization {
    /// Lowercase, strip boundary punctuation, keep word-internal `-`, `'`, `.`.
    #[default]
    Standard,
    /// Whitespace splitting only; text is compared verbatim.
    Raw,
}

impl Normalization {
    pub fn as_str(&self) -> &'static str {
        match self {
            Normalization::Standard => "standard",
            Normalization::Raw => "raw",
        }
    }

    pub fn normalize(&self, text: &str) -> String {
        let seq = self.tokenize(text);
        join_normalized(&seq.tokens)
    }

    pub fn tokenize(&self, text: &str) -> TokenSequence {
        let chars: Vec<char> = text.chars().collect();
        let mut tokens = Vec::new();
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
            match self {
                Normalization::Raw => tokens.push(Token {
                    surface: chars[start..i].iter().collect(),
                    normalized: chars[start..i].iter().collect(),
                    span: Span::new(start, i),
                }),
                Normalization::Standard => split_chunk(&chars, start, i, &mut tokens),
            }
        }
        TokenSequence { source: text.to_owned(), tokens }
    }
}

impl fmt::Display for Normalization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Normalization {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "standard" => Ok(Normalization::Standard),
            "raw" => Ok(Normalization::Raw),
            other => Err(format!("unknown normalization `{other}` (expected standard|raw)")),
        }
    }
}

fn is_punctuation(c: char) -> bool {
    c.general_category_group() == GeneralCategoryGroup::Punctuation
}

fn is_joiner(c: char) -> bool {
    matches!(c, '-' | '\'' | '.')
}

/// Splits one whitespace-free chunk `chars[start..end]` into tokens.
///
/// Punctuation breaks the chunk unless it is a joiner with alphanumeric
/// neighbours on both sides. Flanking is judged on the lowercased form so
/// that normalizing twice yields the same tokens.
fn split_chunk(chars: &[char], start: usize, end: usize, out: &mut Vec<Token>) {
    // (lowercased char, source index)
    let mut lowered: Vec<(char, usize)> = Vec::with_capacity(end - start);
    for (idx, c) in chars.iter().enumerate().take(end).skip(start) {
        lowered.extend(c.to_lowercase().map(|l| (l, idx)));
    }

    let keep = |k: usize| -> bool {
        let c = lowered[k].0;
        if !is_punctuation(c) {
            return true;
        }
        if !is_joiner(c) || k == 0 || k + 1 == lowered.len() {
            return false;
        }
        lowered[k - 1].0.is_alphanumeric() && lowered[k + 1].0.is_alphanumeric()
    };

    let mut k = 0;
    while k < lowered.len() {
        if !keep(k) {
            k += 1;
            continue;
        }
        let run_start = k;
        let mut normalized = String::new();
        while k < lowered.len() && keep(k) {
            normalized.push(lowered[k].0);
            k += 1;
        }
        let begin = lowered[run_start].1;
        let end = lowered[k - 1].1 + 1;
        out.push(Token { surface: chars[begin..end].iter().collect(), normalized, span: Span::new(begin, end) });
    }
}

fn join_normalized(tokens: &[Token]) -> String {
    let mut out = String::new();
    for (i, t) in tokens.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        out.push_str(&t.normalized);
    }
    out
}

/// Standard normalization: lowercase, collapse whitespace, strip boundary
/// punctuation.
pub fn normalize(text: &str) -> String {
    Normalization::Standard.normalize(text)
}

pub fn tokenize(text: &str) -> TokenSequence {
    Normalization::Standard.tokenize(text)
}

/// All contiguous n-grams for n in `1..=max_n`, ordered by start token then
/// length.
pub fn ngrams(seq: &TokenSequence, max_n: usize) -> Vec<CandidateSpan> {
    assert!(max_n >= 1, "max_n must be at least 1");
    let tokens = &seq.tokens;
    let mut out = Vec::with_capacity(tokens.len() * max_n.min(tokens.len()));
    for start in 0..tokens.len() {
        let mut surface = String::new();
        let mut normalized = String::new();
        for (len, tok) in tokens[start..].iter().take(max_n).enumerate() {
            if len > 0 {
                surface.push(' ');
                normalized.push(' ');
            }
            surface.push_str(&tok.surface);
            normalized.push_str(&tok.normalized);
            out.push(CandidateSpan {
                start_token: start,
                length_tokens: len + 1,
                surface: surface.clone(),
                normalized: normalized.clone(),
            });
        }
    }
    out
}

/// Number of candidates `ngrams` produces for `tokens` tokens.
pub fn ngram_count(tokens: usize, max_n: usize) -> usize {
    (1..=max_n.min(tokens)).map(|k| tokens - k + 1).sum()
}
