use medalign_core::align::AlignConfig;
use medalign_core::corpus::Annotations;
use medalign_core::eval::evaluate_corpus;
use medalign_core::fixtures::{synth_corpus, NoiseOps, NoiseScope, NoiseSpec, SynthSpec};
use medalign_core::metrics::aggregate;

fn corpus_metrics(spec: &SynthSpec) -> medalign_core::CorpusMetrics {
    let (pairs, sets) = synth_corpus(spec);
    let annotations = Annotations { sets: sets.into_iter().map(|s| (s.id.clone(), s)).collect(), warnings: Vec::new() };
    let results = evaluate_corpus(&pairs, &annotations, &AlignConfig::default(), 1).unwrap();
    aggregate(results.iter().map(|r| &r.metrics))
}

fn ranks(xs: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..xs.len()).collect();
    idx.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut out = vec![0.0; xs.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && xs[idx[j + 1]] == xs[idx[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            out[k] = rank;
        }
        i = j + 1;
    }
    out
}

fn spearman(x: &[f64], y: &[f64]) -> f64 {
    let (rx, ry) = (ranks(x), ranks(y));
    let n = x.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    cov / (vx * vy).sqrt()
}

#[test]
fn zero_noise_gives_perfect_scores() {
    let spec = SynthSpec {
        samples: 60,
        seed: 5,
        noise: NoiseSpec::new(NoiseOps::ALL, 0.0, NoiseScope::AllTokens),
        ..SynthSpec::default()
    };
    let m = corpus_metrics(&spec);
    assert_eq!(m.wer.errors(), 0);
    assert_eq!(m.mwer.errors(), 0);
    assert_eq!(m.mcer.errors(), 0);
    assert!(m.recall.values().all(|r| r.recalled == r.total && r.total > 0));
}

#[test]
fn mcer_rises_with_entity_substitution_rate() {
    let rates: Vec<f64> = (0..=10).map(|k| k as f64 * 0.05).collect();
    let mut mean_mcer = Vec::new();
    for &rate in &rates {
        let mut total = 0.0;
        for seed in 0..100 {
            let spec = SynthSpec {
                samples: 4,
                seed,
                noise: NoiseSpec::new(NoiseOps::CHAR_SUB, rate, NoiseScope::EntitySpans),
                ..SynthSpec::default()
            };
            total += corpus_metrics(&spec).mcer.rate().unwrap();
        }
        mean_mcer.push(total / 100.0);
    }
    let rho = spearman(&rates, &mean_mcer);
    assert!(rho > 0.9, "spearman {rho}, means {mean_mcer:?}");
}

#[test]
fn spearman_helper_handles_ties() {
    assert_eq!(spearman(&[1.0, 2.0, 3.0], &[10.0, 20.0, 30.0]), 1.0);
    assert_eq!(ranks(&[5.0, 1.0, 5.0]), vec![2.5, 1.0, 2.5]);
}
