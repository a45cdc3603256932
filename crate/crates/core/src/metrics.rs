//! Edit-distance engine and the evaluation metrics built on it.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::align::{self, AlignedEntity, EntityCategory};
use crate::text::Normalization;

/// Substitution / insertion / deletion / hit counts for one alignment of a
/// hypothesis against a reference.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EditCounts {
    pub substitutions: u64,
    pub insertions: u64,
    pub deletions: u64,
    pub hits: u64,
    pub ref_len: u64,
}

impl EditCounts {
    pub fn errors(&self) -> u64 {
        self.substitutions + self.insertions + self.deletions
    }

    /// `(S + I + D) / ref_len`, or `None` when the reference is empty.
    pub fn rate(&self) -> Option<f64> {
        (self.ref_len > 0).then(|| self.errors() as f64 / self.ref_len as f64)
    }

    pub fn ratio(&self) -> Ratio {
        Ratio::new(self.errors(), self.ref_len)
    }

    pub fn add(&mut self, other: &EditCounts) {
        self.substitutions += other.substitutions;
        self.insertions += other.insertions;
        self.deletions += other.deletions;
        self.hits += other.hits;
        self.ref_len += other.ref_len;
    }
}

/// An exact non-negative fraction, used wherever a rate must be reported
/// without floating-point drift.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Ratio {
    pub num: u64,
    pub den: u64,
}

impl Ratio {
    pub fn new(num: u64, den: u64) -> Self {
        Self { num, den }
    }

    pub fn value(&self) -> Option<f64> {
        (self.den > 0).then(|| self.num as f64 / self.den as f64)
    }

    /// Decimal rendering rounded half-to-even at `places` digits.
    pub fn to_fixed(&self, places: u32) -> Option<String> {
        if self.den == 0 {
            return None;
        }
        let scale = 10u128.pow(places);
        let scaled = self.num as u128 * scale;
        let den = self.den as u128;
        let (mut q, r) = (scaled / den, scaled % den);
        if 2 * r > den || (2 * r == den && q % 2 == 1) {
            q += 1;
        }
        let int = q / scale;
        let frac = q % scale;
        Some(if places == 0 { int.to_string() } else { format!("{int}.{frac:0width$}", width = places as usize) })
    }

    /// Value rounded half-to-even at `places` digits.
    pub fn rounded(&self, places: u32) -> Option<f64> {
        self.to_fixed(places).map(|s| s.parse().expect("decimal string"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Step {
    Hit,
    Sub,
    Del,
    Ins,
}

/// Unit-cost Levenshtein alignment of `hyp` against `reference`.
///
/// Among cost-equal alignments the backtrace prefers match, then
/// substitution, then deletion, then insertion, so the S/I/D split is
/// deterministic. Only the total is alignment-invariant.
pub fn edit_distance<T: PartialEq>(reference: &[T], hyp: &[T]) -> EditCounts {
    let (n, m) = (reference.len(), hyp.len());
    let width = m + 1;
    let mut cost = vec![0u32; (n + 1) * width];
    for (j, c) in cost[..width].iter_mut().enumerate() {
        *c = j as u32;
    }
    for i in 1..=n {
        cost[i * width] = i as u32;
        for j in 1..=m {
            let diag = cost[(i - 1) * width + j - 1] + u32::from(reference[i - 1] != hyp[j - 1]);
            let up = cost[(i - 1) * width + j] + 1;
            let left = cost[i * width + j - 1] + 1;
            cost[i * width + j] = diag.min(up).min(left);
        }
    }

    let mut counts = EditCounts { ref_len: n as u64, ..EditCounts::default() };
    let (mut i, mut j) = (n, m);
    while i > 0 || j > 0 {
        let here = cost[i * width + j];
        let step = if i > 0 && j > 0 {
            let same = reference[i - 1] == hyp[j - 1];
            let diag = cost[(i - 1) * width + j - 1];
            if same && diag == here {
                Step::Hit
            } else if !same && diag + 1 == here {
                Step::Sub
            } else if cost[(i - 1) * width + j] + 1 == here {
                Step::Del
            } else {
                Step::Ins
            }
        } else if i > 0 {
            Step::Del
        } else {
            Step::Ins
        };
        match step {
            Step::Hit => {
                counts.hits += 1;
                i -= 1;
                j -= 1;
            }
            Step::Sub => {
                counts.substitutions += 1;
                i -= 1;
                j -= 1;
            }
            Step::Del => {
                counts.deletions += 1;
                i -= 1;
            }
            Step::Ins => {
                counts.insertions += 1;
                j -= 1;
            }
        }
    }
    counts
}

/// Word error counts between two full transcripts after normalization.
pub fn wer(reference: &str, hypothesis: &str) -> EditCounts {
    wer_with(reference, hypothesis, Normalization::Standard)
}

pub fn wer_with(reference: &str, hypothesis: &str, normalization: Normalization) -> EditCounts {
    let r = normalization.tokenize(reference);
    let h = normalization.tokenize(hypothesis);
    let r: Vec<&str> = r.normalized_words().collect();
    let h: Vec<&str> = h.normalized_words().collect();
    edit_distance(&r, &h)
}

/// Word-level errors between the concatenated ground-truth entities and the
/// concatenated aligned candidates.
pub fn medical_wer(aligned: &[AlignedEntity]) -> EditCounts {
    let reference = align::ground_truth_sequence(aligned);
    let recovered = align::recovered_sequence(aligned);
    let r: Vec<&str> = reference.split(' ').filter(|w| !w.is_empty()).collect();
    let h: Vec<&str> = recovered.split(' ').filter(|w| !w.is_empty()).collect();
    edit_distance(&r, &h)
}

/// Character-level analogue of [`medical_wer`], separators included.
pub fn medical_cer(aligned: &[AlignedEntity]) -> EditCounts {
    let r: Vec<char> = align::ground_truth_sequence(aligned).chars().collect();
    let h: Vec<char> = align::recovered_sequence(aligned).chars().collect();
    edit_distance(&r, &h)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RecallCount {
    pub recalled: u64,
    pub total: u64,
}

impl RecallCount {
    pub fn ratio(&self) -> Ratio {
        Ratio::new(self.recalled, self.total)
    }

    pub fn add(&mut self, other: &RecallCount) {
        self.recalled += other.recalled;
        self.total += other.total;
    }
}

/// Exact-match recall per category; categories without entities are absent.
pub fn entity_recall(aligned: &[AlignedEntity]) -> BTreeMap<EntityCategory, RecallCount> {
    let mut out: BTreeMap<EntityCategory, RecallCount> = BTreeMap::new();
    for a in aligned {
        let slot = out.entry(a.entity.category).or_default();
        slot.total += 1;
        if a.exact {
            slot.recalled += 1;
        }
    }
    out
}

/// Metadata carried through from the manifest for grouping.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SampleMeta {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub accent: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SampleMetrics {
    pub id: String,
    pub meta: SampleMeta,
    pub wer: EditCounts,
    pub mwer: EditCounts,
    pub mcer: EditCounts,
    pub recall: BTreeMap<EntityCategory, RecallCount>,
    pub entities: u64,
    pub reused_candidates: u64,
}

impl SampleMetrics {
    pub fn from_alignment(id: impl Into<String>, meta: SampleMeta, wer: EditCounts, aligned: &[AlignedEntity]) -> Self {
        Self {
            id: id.into(),
            meta,
            wer,
            mwer: medical_wer(aligned),
            mcer: medical_cer(aligned),
            recall: entity_recall(aligned),
            entities: aligned.len() as u64,
            reused_candidates: align::reused_candidates(aligned) as u64,
        }
    }
}

/// Per-sample rates collected for macro averaging.
///
/// Values are kept sorted rather than summed on the fly, so the mean and
/// equality do not depend on reduction order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MacroAccumulator {
    values: Vec<f64>,
}

impl MacroAccumulator {
    pub fn push(&mut self, value: f64) {
        let at = self.values.partition_point(|v| v.total_cmp(&value).is_le());
        self.values.insert(at, value);
    }

    pub fn merge(&mut self, other: &MacroAccumulator) {
        self.values.extend_from_slice(&other.values);
        self.values.sort_by(f64::total_cmp);
    }

    fn extend_rate(&mut self, counts: &EditCounts) {
        if let Some(r) = counts.rate() {
            self.push(r);
        }
    }

    pub fn count(&self) -> usize {
        self.values.len()
    }

    pub fn mean(&self) -> Option<f64> {
        if self.values.is_empty() {
            return None;
        }
        Some(self.values.iter().sum::<f64>() / self.values.len() as f64)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct MacroMetrics {
    pub wer: MacroAccumulator,
    pub mwer: MacroAccumulator,
    pub mcer: MacroAccumulator,
    pub recall: BTreeMap<EntityCategory, MacroAccumulator>,
}

/// Corpus-level sums. Micro rates come from the summed counts; macro means
/// are tracked alongside.
///
/// Samples whose reference has no words are left out of the WER sums, and
/// samples without entities are left out of the M-WER / M-CER sums. Both
/// are counted.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CorpusMetrics {
    pub samples: u64,
    pub skipped_zero_entity: u64,
    pub skipped_zero_word: u64,
    pub reused_candidates: u64,
    pub wer: EditCounts,
    pub mwer: EditCounts,
    pub mcer: EditCounts,
    pub recall: BTreeMap<EntityCategory, RecallCount>,
    pub macro_: MacroMetrics,
}

impl CorpusMetrics {
    pub fn absorb(&mut self, s: &SampleMetrics) {
        self.samples += 1;
        self.reused_candidates += s.reused_candidates;
        match s.wer.rate() {
            Some(rate) => {
                self.wer.add(&s.wer);
                self.macro_.wer.push(rate);
            }
            None => self.skipped_zero_word += 1,
        }
        if s.mwer.ref_len == 0 {
            self.skipped_zero_entity += 1;
        } else {
            self.mwer.add(&s.mwer);
            self.mcer.add(&s.mcer);
            self.macro_.mwer.extend_rate(&s.mwer);
            self.macro_.mcer.extend_rate(&s.mcer);
        }
        for (cat, rc) in &s.recall {
            self.recall.entry(*cat).or_default().add(rc);
            if let Some(v) = rc.ratio().value() {
                self.macro_.recall.entry(*cat).or_default().push(v);
            }
        }
    }

    pub fn merge(mut self, other: &CorpusMetrics) -> CorpusMetrics {
        self.samples += other.samples;
        self.skipped_zero_entity += other.skipped_zero_entity;
        self.skipped_zero_word += other.skipped_zero_word;
        self.reused_candidates += other.reused_candidates;
        self.wer.add(&other.wer);
        self.mwer.add(&other.mwer);
        self.mcer.add(&other.mcer);
        for (cat, rc) in &other.recall {
            self.recall.entry(*cat).or_default().add(rc);
        }
        self.macro_.wer.merge(&other.macro_.wer);
        self.macro_.mwer.merge(&other.macro_.mwer);
        self.macro_.mcer.merge(&other.macro_.mcer);
        for (cat, acc) in &other.macro_.recall {
            self.macro_.recall.entry(*cat).or_default().merge(acc);
        }
        self
    }
}

pub fn aggregate<'a>(samples: impl IntoIterator<Item = &'a SampleMetrics>) -> CorpusMetrics {
    let mut corpus = CorpusMetrics::default();
    for s in samples {
        corpus.absorb(s);
    }
    corpus
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::align::{med_text_align, AlignConfig, EntityAnnotation};

    fn words(s: &str) -> Vec<&str> {
        s.split_whitespace().collect()
    }

    #[test]
    fn edit_distance_examples() {
        let c = edit_distance(&["a", "b"], &["a", "b"]);
        assert_eq!((c.errors(), c.hits, c.rate()), (0, 2, Some(0.0)));

        let c = edit_distance(&words("quinidine disopyramide digoxin"), &words("quinidan disopiramid dikod sin"));
        assert_eq!((c.substitutions, c.insertions, c.deletions), (3, 1, 0));
        assert_eq!(c.ratio(), Ratio::new(4, 3));

        let c = edit_distance(&["a", "b", "c"], &[] as &[&str]);
        assert_eq!((c.deletions, c.rate()), (3, Some(1.0)));
    }

    #[test]
    fn backtrace_prefers_substitution_over_indel_pairs() {
        let c = edit_distance(&['a', 'b'], &['a', 'c']);
        assert_eq!((c.hits, c.substitutions, c.insertions, c.deletions), (1, 1, 0, 0));
        let c = edit_distance(&[] as &[char], &['x', 'y']);
        assert_eq!((c.insertions, c.ref_len, c.rate()), (2, 0, None));
    }

    #[test]
    fn counts_satisfy_reference_identity() {
        let c = edit_distance(&words("a b c d e"), &words("x a c c e f g"));
        assert_eq!(c.hits + c.substitutions + c.deletions, c.ref_len);
    }

    #[test]
    fn wer_examples() {
        let s = "lungs clear but dim scattered rhonchi nonproductive cough";
        assert_eq!(wer(s, s).rate(), Some(0.0));
        assert_eq!(wer("lungs clear but dim", "last clear but deems").rate(), Some(0.5));
        assert_eq!(wer("a", "").rate(), Some(1.0));
        assert_eq!(wer("Lungs, clear.", "lungs clear").rate(), Some(0.0));
        assert_eq!(wer_with("Lungs, clear.", "lungs clear", Normalization::Raw).rate(), Some(1.0));
        assert_eq!(wer("", "extra").rate(), None);
    }

    fn digoxin() -> Vec<AlignedEntity> {
        use EntityCategory::Medication as M;
        let reference =
            "unlike quinidine, disopyramide does not increase the plasma concentration of digoxin in patients";
        let hyp = "anlike quinidan, disopiramid dos not incruse the plasma concentration of dikod sin in pesion";
        let e = vec![
            EntityAnnotation::new("quinidine", M, 7, 16),
            EntityAnnotation::new("disopyramide", M, 18, 30),
            EntityAnnotation::new("digoxin", M, 77, 84),
        ];
        assert_eq!(&reference[77..84], "digoxin");
        med_text_align(&e, hyp, &AlignConfig::default()).unwrap()
    }

    #[test]
    fn medical_metrics_on_digoxin_sentence() {
        let aligned = digoxin();
        assert_eq!(medical_wer(&aligned).ratio(), Ratio::new(4, 3));
        let cer = medical_cer(&aligned);
        assert_eq!(cer.ratio(), Ratio::new(8, 30));
        assert_eq!(cer.ratio().to_fixed(4).unwrap(), "0.2667");
    }

    #[test]
    fn unmatched_entities_become_deletions() {
        let e = vec![EntityAnnotation::new("ab", EntityCategory::Medication, 0, 2)];
        let aligned = med_text_align(&e, "", &AlignConfig::default()).unwrap();
        assert_eq!(medical_wer(&aligned).rate(), Some(1.0));
        let cer = medical_cer(&aligned);
        assert_eq!((cer.deletions, cer.rate()), (2, Some(1.0)));
        assert!(entity_recall(&aligned)[&EntityCategory::Medication].recalled == 0);
    }

    #[test]
    fn recall_counts_exact_matches_per_category() {
        use EntityCategory::*;
        let hyp =
            "except for ketami, befullin agents have no anagesic propatis and do not cose paralysis o mozul relaxition";
        let e = vec![
            EntityAnnotation::new("ketamine", Medication, 11, 19),
            EntityAnnotation::new("analgesic properties", TestTreatmentProcedure, 50, 70),
            EntityAnnotation::new("paralysis", Condition, 88, 97),
            EntityAnnotation::new("muscle relaxation", Condition, 101, 118),
        ];
        let aligned = med_text_align(&e, hyp, &AlignConfig::default()).unwrap();
        let r = entity_recall(&aligned);
        assert_eq!(r[&Condition], RecallCount { recalled: 1, total: 2 });
        assert_eq!(r[&Medication], RecallCount { recalled: 0, total: 1 });
        assert_eq!(r[&TestTreatmentProcedure], RecallCount { recalled: 0, total: 1 });
        assert!(!r.contains_key(&Anatomy));
        assert!(entity_recall(&[]).is_empty());
    }

    fn sample(id: &str, wer: (u64, u64), recall: Option<(u64, u64)>) -> SampleMetrics {
        let counts = EditCounts { substitutions: wer.0, hits: wer.1 - wer.0, ref_len: wer.1, ..EditCounts::default() };
        let mut rec = BTreeMap::new();
        if let Some((r, t)) = recall {
            rec.insert(EntityCategory::Medication, RecallCount { recalled: r, total: t });
        }
        SampleMetrics {
            id: id.into(),
            meta: SampleMeta::default(),
            wer: counts,
            mwer: counts,
            mcer: counts,
            recall: rec,
            entities: 1,
            reused_candidates: 0,
        }
    }

    #[test]
    fn aggregate_examples() {
        let a = sample("a", (1, 2), Some((1, 2)));
        let b = sample("b", (0, 2), Some((3, 4)));
        let c = aggregate([&a, &b]);
        assert_eq!(c.wer.rate(), Some(0.25));
        assert_eq!(c.macro_.wer.mean(), Some(0.25));
        let rec = c.recall[&EntityCategory::Medication];
        assert_eq!(rec.ratio(), Ratio::new(4, 6));
        assert_eq!(c.macro_.recall[&EntityCategory::Medication].mean(), Some(0.625));

        let single = aggregate([&a]);
        assert_eq!(single.wer, a.wer);
        assert_eq!(single.recall, a.recall);

        let empty = aggregate([]);
        assert_eq!(empty.samples, 0);
        assert_eq!(empty.wer.rate(), None);
    }

    #[test]
    fn merge_matches_sequential_absorb() {
        let all: Vec<_> = (0..7).map(|i| sample(&i.to_string(), (i % 3, 3 + i), Some((i % 2, 2)))).collect();
        let whole = aggregate(&all);
        let merged = aggregate(&all[4..]).merge(&aggregate(&all[..4]));
        assert_eq!(whole.wer, merged.wer);
        assert_eq!(whole.recall, merged.recall);
        assert_eq!(whole.macro_.wer.mean(), merged.macro_.wer.mean());
    }

    #[test]
    fn half_even_fixed_rendering() {
        assert_eq!(Ratio::new(4, 3).to_fixed(4).unwrap(), "1.3333");
        assert_eq!(Ratio::new(1, 2).to_fixed(4).unwrap(), "0.5000");
        assert_eq!(Ratio::new(1, 80000).to_fixed(4).unwrap(), "0.0000");
        assert_eq!(Ratio::new(1, 20000).to_fixed(4).unwrap(), "0.0000");
        assert_eq!(Ratio::new(3, 20000).to_fixed(4).unwrap(), "0.0002");
        assert_eq!(Ratio::new(1, 8).to_fixed(2).unwrap(), "0.12");
        assert_eq!(Ratio::new(3, 8).to_fixed(2).unwrap(), "0.38");
        assert_eq!(Ratio::new(1, 0).to_fixed(4), None);
    }
}
