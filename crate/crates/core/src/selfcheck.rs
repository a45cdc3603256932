//! Runtime verification against the golden fixtures and the naive oracles.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::align::{self, AlignConfig};
use crate::eval;
use crate::fixtures::{ExpectedAlignment, FixtureSet};
use crate::fuzzy::similarity_ratio;
use crate::metrics::{self, edit_distance, EditCounts};
use crate::reference;

const RANDOM_PAIRS: usize = 500;
const ORACLE_SEED: u64 = 0x5eed;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub group: &'static str,
    pub name: String,
    pub failures: Vec<String>,
}

impl Check {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = if self.passed() { "ok  " } else { "FAIL" };
        write!(f, "{status} {}: {}", self.group, self.name)?;
        for msg in &self.failures {
            write!(f, "\n       {msg}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SelfcheckReport {
    pub checks: Vec<Check>,
}

impl SelfcheckReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(Check::passed)
    }

    pub fn failed(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed())
    }

    fn push(&mut self, group: &'static str, name: impl Into<String>, failures: Vec<String>) {
        self.checks.push(Check { group, name: name.into(), failures });
    }
}

/// Runs every check. `config` is the configuration the caller would use for
/// real evaluation (normally the built-in defaults); drift between it and the
/// fixture configuration is itself reported as a failure.
pub fn selfcheck(fixtures: &FixtureSet, config: &AlignConfig) -> SelfcheckReport {
    let mut report = SelfcheckReport::default();
    check_config(fixtures, config, &mut report);
    check_golden(fixtures, config, &mut report);
    check_fuzzy_oracle(fixtures, config, &mut report);
    check_edit_oracle(fixtures, config, &mut report);
    check_identities(fixtures, config, &mut report);
    report
}

fn check_config(fixtures: &FixtureSet, config: &AlignConfig, report: &mut SelfcheckReport) {
    let mut failures = Vec::new();
    let expected = &fixtures.config;
    if config.threshold != expected.threshold {
        failures.push(format!("threshold is {}, fixtures expect {}", config.threshold, expected.threshold));
    }
    if config.max_ngram != expected.max_ngram {
        failures.push(format!("max n-gram is {}, fixtures expect {}", config.max_ngram, expected.max_ngram));
    }
    if config.normalization != expected.normalization {
        failures.push(format!("normalization is {}, fixtures expect {}", config.normalization, expected.normalization));
    }
    if let Err(e) = config.validate() {
        failures.push(e.to_string());
    }
    report.push("config", "defaults match fixture configuration", failures);
}

fn describe(a: &ExpectedAlignment) -> String {
    match &a.candidate {
        Some(c) => format!("`{c}` {}/{}", 2 * a.matched, a.total),
        None => "no match".to_owned(),
    }
}

fn check_golden(fixtures: &FixtureSet, config: &AlignConfig, report: &mut SelfcheckReport) {
    for fixture in &fixtures.fixtures {
        let id = &fixture.pair.id;
        let result = match eval::evaluate_sample(&fixture.pair, &fixture.entities, config) {
            Ok(r) => r,
            Err(e) => {
                report.push("golden", format!("{id} alignment"), vec![e.to_string()]);
                continue;
            }
        };

        let mut failures = Vec::new();
        if result.aligned.len() != fixture.expected.alignments.len() {
            failures.push(format!(
                "{} entities aligned, {} expected",
                result.aligned.len(),
                fixture.expected.alignments.len()
            ));
        }
        for (got, want) in result.aligned.iter().zip(&fixture.expected.alignments) {
            let actual = ExpectedAlignment {
                entity: got.entity.text.clone(),
                candidate: got.candidate.as_ref().map(|c| c.normalized.clone()),
                start_token: got.candidate.as_ref().map(|c| c.start_token),
                length_tokens: got.candidate.as_ref().map(|c| c.length_tokens),
                matched: got.score.matched,
                total: if got.candidate.is_some() { got.score.total } else { 1 },
                exact: got.exact,
            };
            if &actual != want {
                failures.push(format!("`{}`: got {}, expected {}", want.entity, describe(&actual), describe(want)));
            }
        }
        report.push("golden", format!("{id} alignment"), failures);

        let mut failures = Vec::new();
        let m = &result.metrics;
        let want = &fixture.expected.metrics;
        for (name, got, exp) in
            [("WER", &m.wer, &want.wer), ("M-WER", &m.mwer, &want.mwer), ("M-CER", &m.mcer, &want.mcer)]
        {
            if got != exp {
                failures.push(format!("{name}: got {}, expected {}", counts(got), counts(exp)));
            }
        }
        if m.recall != want.recall {
            failures.push(format!("recall: got {:?}, expected {:?}", m.recall, want.recall));
        }
        report.push("golden", format!("{id} metrics"), failures);
    }
}

fn counts(c: &EditCounts) -> String {
    format!("S={} I={} D={} H={} N={}", c.substitutions, c.insertions, c.deletions, c.hits, c.ref_len)
}

fn random_string(rng: &mut ChaCha8Rng, alphabet: &[char], max_len: usize) -> String {
    let len = rng.gen_range(0..=max_len);
    (0..len).map(|_| alphabet[rng.gen_range(0..alphabet.len())]).collect()
}

fn check_fuzzy_oracle(fixtures: &FixtureSet, config: &AlignConfig, report: &mut SelfcheckReport) {
    let mut failures = Vec::new();
    for fixture in &fixtures.fixtures {
        for a in &fixture.expected.alignments {
            let Some(candidate) = &a.candidate else { continue };
            let entity = config.normalization.normalize(&a.entity);
            let (num, den) = reference::gestalt_ratio(&entity, candidate);
            if (num, den) != (2 * a.matched, a.total) {
                failures.push(format!(
                    "`{entity}` vs `{candidate}`: oracle {num}/{den}, fixture {}/{}",
                    2 * a.matched,
                    a.total
                ));
            }
        }
    }
    report.push("fuzzy", "oracle reproduces fixture scores", failures);

    let mut rng = ChaCha8Rng::seed_from_u64(ORACLE_SEED);
    let alphabet = ['a', 'b', 'c', 'd', ' '];
    let mut failures = Vec::new();
    for _ in 0..RANDOM_PAIRS {
        let a = random_string(&mut rng, &alphabet, 12);
        let b = random_string(&mut rng, &alphabet, 12);
        let fast = similarity_ratio(&a, &b);
        let fast = if fast.total == 0 { (1, 1) } else { (2 * fast.matched, fast.total) };
        let slow = reference::gestalt_ratio(&a, &b);
        if fast != slow {
            failures.push(format!("`{a}` vs `{b}`: {}/{} != oracle {}/{}", fast.0, fast.1, slow.0, slow.1));
        }
    }
    report.push("fuzzy", format!("{RANDOM_PAIRS} seeded pairs agree with oracle"), failures);
}

fn check_edit_oracle(fixtures: &FixtureSet, config: &AlignConfig, report: &mut SelfcheckReport) {
    let mut failures = Vec::new();
    for fixture in &fixtures.fixtures {
        let r: Vec<String> =
            config.normalization.tokenize(&fixture.pair.reference).normalized_words().map(str::to_owned).collect();
        let h: Vec<String> =
            config.normalization.tokenize(&fixture.pair.hypothesis).normalized_words().map(str::to_owned).collect();
        let oracle = reference::levenshtein(&r, &h) as u64;
        let expected = fixture.expected.metrics.wer.errors();
        if oracle != expected {
            failures.push(format!("{}: oracle distance {oracle}, fixture {expected}", fixture.pair.id));
        }
    }
    report.push("edit", "oracle reproduces fixture word distances", failures);

    let mut rng = ChaCha8Rng::seed_from_u64(ORACLE_SEED + 1);
    let alphabet = ['a', 'b', 'c'];
    let mut failures = Vec::new();
    for _ in 0..RANDOM_PAIRS {
        let a: Vec<char> = random_string(&mut rng, &alphabet, 8).chars().collect();
        let b: Vec<char> = random_string(&mut rng, &alphabet, 8).chars().collect();
        let c = edit_distance(&a, &b);
        let oracle = reference::levenshtein(&a, &b) as u64;
        let consistent = c.hits + c.substitutions + c.deletions == a.len() as u64
            && c.hits + c.substitutions + c.insertions == b.len() as u64;
        if c.errors() != oracle || !consistent {
            failures.push(format!("{a:?} vs {b:?}: {} vs oracle {oracle}", counts(&c)));
        }
    }
    report.push("edit", format!("{RANDOM_PAIRS} seeded pairs agree with oracle"), failures);
}

fn check_identities(fixtures: &FixtureSet, config: &AlignConfig, report: &mut SelfcheckReport) {
    let mut failures = Vec::new();
    let mut samples = Vec::new();
    for fixture in &fixtures.fixtures {
        let Ok(result) = eval::evaluate_sample(&fixture.pair, &fixture.entities, config) else {
            continue;
        };
        let id = &fixture.pair.id;
        let m = &result.metrics;
        if m.mwer.ref_len != align::ground_truth_sequence(&result.aligned).split_whitespace().count() as u64 {
            failures.push(format!("{id}: M-WER reference length is not the entity word count"));
        }
        if m.mcer != metrics::medical_cer(&result.aligned) {
            failures.push(format!("{id}: M-CER differs between direct and per-sample paths"));
        }
        if m.recall.values().any(|r| r.recalled > r.total) {
            failures.push(format!("{id}: recall exceeds 1"));
        }
        let all_exact = result.aligned.iter().all(|a| a.exact);
        if all_exact && (m.mwer.errors() != 0 || m.mcer.errors() != 0) {
            failures.push(format!("{id}: all entities exact but medical errors are nonzero"));
        }
        samples.push(result.metrics);
    }
    let whole = metrics::aggregate(&samples);
    let (left, right) = samples.split_at(samples.len() / 2);
    let split = metrics::aggregate(left).merge(&metrics::aggregate(right));
    if whole != split {
        failures.push("aggregate differs when the corpus is split and merged".to_owned());
    }
    report.push("identity", "metric identities hold on fixtures", failures);
}
