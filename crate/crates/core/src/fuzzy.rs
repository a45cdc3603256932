//! Ratcliff/Obershelp ("gestalt") similarity.
//!
//! The score of two strings is `2 * M / T`, where `T` is the sum of their
//! lengths and `M` the number of characters covered by matching blocks: the
//! longest common contiguous block, then recursively the blocks found in the
//! unmatched regions to its left and right. No junk heuristic is applied, so
//! scores depend only on the two strings.

use std::cmp::Ordering;
use std::fmt;
use std::ops::Range;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchBlock {
    pub a_start: usize,
    pub b_start: usize,
    pub length: usize,
}

/// A similarity ratio kept as the exact fraction `2 * matched / total`.
///
/// Comparisons are exact (cross-multiplied), so ranking candidates never
/// depends on floating-point rounding.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SimilarityScore {
    pub matched: usize,
    pub total: usize,
}

impl SimilarityScore {
    pub const ZERO: SimilarityScore = SimilarityScore { matched: 0, total: 1 };

    pub const ONE: SimilarityScore = SimilarityScore { matched: 0, total: 0 };

    pub fn new(matched: usize, total: usize) -> Self {
        assert!(2 * matched <= total, "matched characters exceed total length");
        Self { matched, total }
    }

    pub fn value(&self) -> f64 {
        if self.total == 0 {
            1.0
        } else {
            (2 * self.matched) as f64 / self.total as f64
        }
    }

    fn fraction(&self) -> (u128, u128) {
        if self.total == 0 {
            (1, 1)
        } else {
            (2 * self.matched as u128, self.total as u128)
        }
    }

    pub fn meets(&self, threshold: f64) -> bool {
        self.value() >= threshold
    }
}

impl Default for SimilarityScore {
    fn default() -> Self {
        Self::ZERO
    }
}

impl PartialEq for SimilarityScore {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for SimilarityScore {}

impl Ord for SimilarityScore {
    fn cmp(&self, other: &Self) -> Ordering {
        let (an, ad) = self.fraction();
        let (bn, bd) = other.fraction();
        (an * bd).cmp(&(bn * ad))
    }
}

impl PartialOrd for SimilarityScore {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for SimilarityScore {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.4}", self.value())
    }
}

/// Longest common block of `a[a_range]` and `b[b_range]`.
///
/// Ties go to the smallest `a_start`, then the smallest `b_start`.
pub fn longest_match<T: PartialEq>(
    a: &[T],
    b: &[T],
    a_range: Range<usize>,
    b_range: Range<usize>,
) -> Option<MatchBlock> {
    let mut lengths = vec![0usize; b_range.len() + 1];
    let mut best: Option<MatchBlock> = None;
    for i in a_range.clone() {
        // Walk b backwards so `lengths[j]` still holds the previous row.
        for j in b_range.clone().rev() {
            let slot = j - b_range.start + 1;
            if a[i] == b[j] {
                let len = lengths[slot - 1] + 1;
                lengths[slot] = len;
                let a_start = i + 1 - len;
                let b_start = j + 1 - len;
                let better = match best {
                    None => true,
                    Some(m) => len > m.length || (len == m.length && a_start == m.a_start && b_start < m.b_start),
                };
                if better {
                    best = Some(MatchBlock { a_start, b_start, length: len });
                }
            } else {
                lengths[slot] = 0;
            }
        }
        lengths[0] = 0;
    }
    best
}

/// All matching blocks in ascending order of position.
pub fn matching_blocks<T: PartialEq>(a: &[T], b: &[T]) -> Vec<MatchBlock> {
    let mut blocks = Vec::new();
    let mut pending = vec![(0..a.len(), 0..b.len())];
    while let Some((ar, br)) = pending.pop() {
        if ar.is_empty() || br.is_empty() {
            continue;
        }
        if let Some(m) = longest_match(a, b, ar.clone(), br.clone()) {
            pending.push((ar.start..m.a_start, br.start..m.b_start));
            pending.push((m.a_start + m.length..ar.end, m.b_start + m.length..br.end));
            blocks.push(m);
        }
    }
    blocks.sort_by_key(|m| (m.a_start, m.b_start));
    blocks
}

pub fn matched_chars<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    matching_blocks(a, b).iter().map(|m| m.length).sum()
}

pub fn similarity_chars(entity: &[char], candidate: &[char]) -> SimilarityScore {
    SimilarityScore::new(matched_chars(entity, candidate), entity.len() + candidate.len())
}

/// Similarity of a ground-truth entity and a candidate, both already
/// normalized. The argument order is part of the contract.
pub fn similarity_ratio(entity: &str, candidate: &str) -> SimilarityScore {
    let a: Vec<char> = entity.chars().collect();
    let b: Vec<char> = candidate.chars().collect();
    similarity_chars(&a, &b)
}

/// Upper bound on `matched_chars`: the size of the character multiset
/// intersection.
pub(crate) fn matched_upper_bound(a: &[char], b: &[char]) -> usize {
    let mut counts: Vec<(char, isize)> = Vec::with_capacity(a.len());
    for &c in a {
        match counts.iter_mut().find(|(k, _)| *k == c) {
            Some((_, n)) => *n += 1,
            None => counts.push((c, 1)),
        }
    }
    let mut hits = 0;
    for &c in b {
        if let Some((_, n)) = counts.iter_mut().find(|(k, _)| *k == c) {
            if *n > 0 {
                *n -= 1;
                hits += 1;
            }
        }
    }
    hits
}
