//! Deliberately naive reference implementations.
//!
//! These share no code with [`crate::fuzzy`] or [`crate::metrics`] and are
//! used by `selfcheck` to re-derive golden values at run time. They are
//! quadratic-to-quartic and only meant for short strings.

/// Matched-character count of the gestalt algorithm, found by enumerating
/// every common substring at each recursion level.
pub fn gestalt_matches(a: &[char], b: &[char]) -> usize {
    if a.is_empty() || b.is_empty() {
        return 0;
    }
    // (length, a_start, b_start); longest first, then leftmost in a, then in b.
    let mut best: Option<(usize, usize, usize)> = None;
    for i in 0..a.len() {
        for j in 0..b.len() {
            let mut k = 0;
            while i + k < a.len() && j + k < b.len() && a[i + k] == b[j + k] {
                k += 1;
            }
            if k == 0 {
                continue;
            }
            let better = match best {
                None => true,
                Some((bk, bi, bj)) => k > bk || (k == bk && (i, j) < (bi, bj)),
            };
            if better {
                best = Some((k, i, j));
            }
        }
    }
    match best {
        None => 0,
        Some((k, i, j)) => k + gestalt_matches(&a[..i], &b[..j]) + gestalt_matches(&a[i + k..], &b[j + k..]),
    }
}

/// Ratio as an exact `(numerator, denominator)` pair: `(2M, |a| + |b|)`.
/// Two empty strings give `(1, 1)`.
pub fn gestalt_ratio(a: &str, b: &str) -> (usize, usize) {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    if a.is_empty() && b.is_empty() {
        return (1, 1);
    }
    (2 * gestalt_matches(&a, &b), a.len() + b.len())
}

/// Unit-cost Levenshtein distance (total only), by full recursion table.
pub fn levenshtein<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let mut table = vec![vec![0usize; b.len() + 1]; a.len() + 1];
    for (i, row) in table.iter_mut().enumerate() {
        row[0] = i;
    }
    for (j, c) in table[0].iter_mut().enumerate() {
        *c = j;
    }
    for i in 1..=a.len() {
        for j in 1..=b.len() {
            let sub = table[i - 1][j - 1] + usize::from(a[i - 1] != b[j - 1]);
            table[i][j] = sub.min(table[i - 1][j] + 1).min(table[i][j - 1] + 1);
        }
    }
    table[a.len()][b.len()]
}
