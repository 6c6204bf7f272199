//! Training-loop properties on small generated corpora.

use std::collections::BTreeMap;

use anchor_absa::abae::{forward, ortho_penalty, top_words, train, AbaeHyper, TrainOutput};
use anchor_absa::cat::{PriorLabel, SeedWords};
use anchor_absa::corpus::GoldCategory;
use anchor_absa::embeddings::{EmbeddingMatrix, SgnsConfig};
use anchor_absa::ensembles::{anchored_train, build_anchors, AnchorSet};
use anchor_absa::numerics::{cosine, l2_normalize};
use anchor_absa::synthetic::{generate, oracle_priors, prepare, Prepared, SyntheticConfig};
use anchor_absa::{Matrix, SeededRng};

fn small_corpus(seed: u64) -> Prepared<f64> {
    let config = SyntheticConfig {
        words_per_topic: 40,
        background_words: 30,
        sentences: 600,
        seed,
        ..SyntheticConfig::default()
    };
    let sgns = SgnsConfig { dim: 16, epochs: 10, seed, ..SgnsConfig::default() };
    prepare(generate(&config).unwrap().sentences, 0.2, &sgns).unwrap()
}

fn hyper(seed: u64) -> AbaeHyper {
    AbaeHyper {
        k: 3,
        epochs: 5,
        batch_size: 32,
        negatives: 5,
        kmeans_restarts: 2,
        seed,
        ..AbaeHyper::default()
    }
}

fn labels(emb: &EmbeddingMatrix<f64>) -> BTreeMap<GoldCategory, Vec<f64>> {
    SeedWords::default().embeddings(&GoldCategory::PRIOR, emb).unwrap()
}

/// Mean cosine between normalized reconstructions and anchors over the
/// anchored sentences.
fn anchor_agreement(out: &TrainOutput<f64>, data: &Prepared<f64>, anchors: &AnchorSet<f64>) -> f64 {
    let mut total = 0.0;
    let mut n = 0;
    for (i, s) in data.train.iter().enumerate() {
        if let (Some(u), false) = (anchors.row(i), s.token_ids.is_empty()) {
            let r = forward(&s.token_ids, &out.params, &data.embeddings).unwrap().r_s;
            total += cosine(&r, u).unwrap();
            n += 1;
        }
    }
    total / n as f64
}

#[test]
fn zero_sigma_matches_plain_training() {
    let data = small_corpus(3);
    let priors = oracle_priors(&data.train, 0.6, 3).unwrap();
    let anchors = build_anchors(&data.train, &priors, &labels(&data.embeddings), 0.0).unwrap();
    let plain = train(&data.train, &data.embeddings, &hyper(3), None).unwrap();
    let zero = anchored_train(&data.train, &data.embeddings, &hyper(3), &anchors).unwrap();
    let bits = |o: &TrainOutput<f64>| o.epoch_losses.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
    assert_eq!(bits(&plain), bits(&zero));
    assert_eq!(plain.params, zero.params);
}

#[test]
fn training_is_deterministic() {
    let data = small_corpus(4);
    let a = train(&data.train, &data.embeddings, &hyper(9), None).unwrap();
    let b = train(&data.train, &data.embeddings, &hyper(9), None).unwrap();
    assert_eq!(a.params, b.params);
    assert_eq!(a.epoch_losses, b.epoch_losses);
    let c = train(&data.train, &data.embeddings, &hyper(10), None).unwrap();
    assert_ne!(a.params, c.params);
}

#[test]
fn loss_falls_over_training() {
    for seed in 1..=3 {
        let data = small_corpus(seed);
        let out = train(&data.train, &data.embeddings, &hyper(seed), None).unwrap();
        let (first, last) = (out.epoch_losses[0], *out.epoch_losses.last().unwrap());
        assert!(last < first, "seed {seed}: loss {first} -> {last}");
    }
}

/// Topic index of a generated word: `t{t}w…` or one of the seed words.
fn topic_of(word: &str) -> Option<usize> {
    match word {
        "food" => Some(0),
        "staff" => Some(1),
        "ambience" => Some(2),
        w => w.strip_prefix('t')?.split_once('w')?.0.parse().ok(),
    }
}

#[test]
fn top_words_come_from_one_topic_per_aspect() {
    let config = SyntheticConfig { seed: 2, ..SyntheticConfig::default() };
    let sgns = SgnsConfig { dim: 50, epochs: 20, seed: 2, ..SgnsConfig::default() };
    let data: Prepared<f64> = prepare(generate(&config).unwrap().sentences, 0.2, &sgns).unwrap();
    let h = AbaeHyper { k: 3, learning_rate: 0.003, seed: 2, ..AbaeHyper::default() };
    let out = train(&data.train, &data.embeddings, &h, None).unwrap();
    let lists = top_words(&out.params.aspects, &data.embeddings, 10).unwrap();
    let mut dominant = Vec::new();
    for words in &lists {
        let mut counts = [0usize; 3];
        for (w, _) in words {
            if let Some(t) = topic_of(w) {
                counts[t] += 1;
            }
        }
        let best = (0..3).max_by_key(|&t| counts[t]).unwrap();
        assert!(counts[best] >= 7, "aspect words {words:?}");
        dominant.push(best);
    }
    dominant.sort_unstable();
    dominant.dedup();
    assert_eq!(dominant.len(), 3, "aspects collapse onto topics {dominant:?}");
}

#[test]
fn orthogonality_weight_lowers_penalty() {
    for seed in 1..=5 {
        let data = small_corpus(seed);
        let with = train(&data.train, &data.embeddings, &hyper(seed), None).unwrap();
        let without = AbaeHyper { lambda: 0.0, ..hyper(seed) };
        let without = train(&data.train, &data.embeddings, &without, None).unwrap();
        let u1 = ortho_penalty(&with.params.aspects).unwrap();
        let u0 = ortho_penalty(&without.params.aspects).unwrap();
        assert!(u1 < u0, "seed {seed}: U with λ=1 is {u1}, with λ=0 is {u0}");
    }
}

#[test]
fn orthonormal_aspects_have_zero_penalty() {
    let mut t = Matrix::<f64>::zeros(3, 5);
    t[(0, 0)] = 1.0;
    t[(1, 3)] = -1.0;
    t[(2, 1)] = 1.0;
    assert_eq!(ortho_penalty(&t).unwrap(), 0.0);
    let s = 0.5f64.sqrt();
    let rotated = Matrix::from_rows(&[vec![s, s, 0.0], vec![s, -s, 0.0], vec![0.0, 0.0, 1.0]]).unwrap();
    assert!(ortho_penalty(&rotated).unwrap() < 1e-15);
}

#[test]
fn correct_anchors_raise_agreement() {
    let data = small_corpus(5);
    let priors = oracle_priors(&data.train, 0.6, 5).unwrap();
    let anchors = build_anchors(&data.train, &priors, &labels(&data.embeddings), 1.0).unwrap();
    let base =
        anchored_train(&data.train, &data.embeddings, &hyper(5), &anchors.clone().with_sigma(0.0).unwrap())
            .unwrap();
    let anchored = anchored_train(&data.train, &data.embeddings, &hyper(5), &anchors).unwrap();
    let before = anchor_agreement(&base, &data, &anchors);
    let after = anchor_agreement(&anchored, &data, &anchors);
    assert!(after > before, "mean cosine {before} -> {after}");
}

#[test]
fn huge_sigma_binds_even_for_wrong_anchors() {
    let data = small_corpus(6);
    // random labels, unrelated to the topics
    let mut rng = SeededRng::new(6);
    let priors: Vec<(String, PriorLabel)> = data
        .train
        .iter()
        .map(|s| {
            let c = GoldCategory::PRIOR[rng.below(3)];
            (s.id.clone(), PriorLabel::Category(c))
        })
        .collect();
    let anchors = build_anchors(&data.train, &priors, &labels(&data.embeddings), 100.0).unwrap();
    let zero = anchors.clone().with_sigma(0.0).unwrap();
    let base = anchored_train(&data.train, &data.embeddings, &hyper(6), &zero).unwrap();
    let forced = anchored_train(&data.train, &data.embeddings, &hyper(6), &anchors).unwrap();
    let before = anchor_agreement(&base, &data, &anchors);
    let after = anchor_agreement(&forced, &data, &anchors);
    assert!(after > before, "mean cosine {before} -> {after}");
}

#[test]
fn all_none_priors_change_nothing() {
    let data = small_corpus(7);
    let priors: Vec<(String, PriorLabel)> =
        data.train.iter().map(|s| (s.id.clone(), PriorLabel::None)).collect();
    let anchors = build_anchors(&data.train, &priors, &labels(&data.embeddings), 5.0).unwrap();
    assert_eq!(anchors.active(), 0);
    let plain = train(&data.train, &data.embeddings, &hyper(7), None).unwrap();
    let masked = anchored_train(&data.train, &data.embeddings, &hyper(7), &anchors).unwrap();
    assert_eq!(plain.epoch_losses, masked.epoch_losses);
}

#[test]
fn single_precision_training() {
    let data = small_corpus(8);
    let emb32 = data.embeddings.cast::<f32>();
    let out = train(&data.train, &emb32, &hyper(8), None).unwrap();
    assert!(out.params.is_finite());
    assert!(out.epoch_losses.iter().all(|l| l.is_finite()));
    let priors = oracle_priors(&data.train, 0.5, 8).unwrap();
    let labels32 = SeedWords::default().embeddings(&GoldCategory::PRIOR, &emb32).unwrap();
    let anchors = build_anchors(&data.train, &priors, &labels32, 0.5f32).unwrap();
    let out = anchored_train(&data.train, &emb32, &hyper(8), &anchors).unwrap();
    assert!(out.params.is_finite());
    let _ = l2_normalize(out.params.aspects.row(0)).unwrap();
}
