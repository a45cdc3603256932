//! Shared inputs for the benchmarks.

use medalign_core::corpus::{AnnotationSet, Annotations, TranscriptPair};
use medalign_core::fixtures::{synth_corpus, NoiseOps, NoiseScope, NoiseSpec, SynthSpec};

/// A seeded synthetic corpus of `samples` sentences at 20% noise.
pub fn corpus(samples: usize) -> (Vec<TranscriptPair>, Annotations) {
    let spec = SynthSpec {
        samples,
        seed: 7,
        noise: NoiseSpec::new(NoiseOps::ALL, 0.2, NoiseScope::AllTokens),
        ..SynthSpec::default()
    };
    let (pairs, sets) = synth_corpus(&spec);
    (pairs, index(sets))
}

pub fn index(sets: Vec<AnnotationSet>) -> Annotations {
    Annotations { sets: sets.into_iter().map(|s| (s.id.clone(), s)).collect(), warnings: Vec::new() }
}
