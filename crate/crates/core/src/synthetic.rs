//! Generated topic corpora with known ground truth.
//!
//! Each topic owns a disjoint block of words drawn with Zipf frequencies,
//! and the topic's seed word (`food`, `staff`, `ambience`) is its most
//! frequent member, so seed-word label embeddings line up with the topics.
//! Sentences mix their own topic's words with background filler and a
//! configurable share of words borrowed from other topics.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use serde::{Deserialize, Serialize};

use crate::cat::PriorLabel;
use crate::corpus::{index_all, GoldCategory, Pos, Sentence, Token, Vocabulary};
use crate::embeddings::{train_sgns, EmbeddingMatrix, SgnsConfig};
use crate::error::{Error, Result};
use crate::numerics::{Scalar, SeededRng};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticConfig {
    pub words_per_topic: usize,
    pub background_words: usize,
    pub sentences: usize,
    pub min_len: usize,
    pub max_len: usize,
    /// Probability that a token comes from the sentence's own topic.
    pub on_topic: f64,
    /// Probability that a token comes from some other topic.
    pub cross_topic: f64,
    /// Zipf exponent for word frequencies within each block.
    pub zipf: f64,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            words_per_topic: 200,
            background_words: 300,
            sentences: 5000,
            min_len: 4,
            max_len: 10,
            on_topic: 0.5,
            cross_topic: 0.15,
            zipf: 1.0,
            seed: 1,
        }
    }
}

impl SyntheticConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(m.to_string()));
        if self.words_per_topic < 2 || self.background_words == 0 {
            return bad("need at least two words per topic and one background word");
        }
        if self.sentences == 0 || self.min_len == 0 || self.min_len > self.max_len {
            return bad("need sentences and 0 < min_len <= max_len");
        }
        let probs_ok = (0.0..=1.0).contains(&self.on_topic)
            && (0.0..=1.0).contains(&self.cross_topic)
            && self.on_topic + self.cross_topic <= 1.0;
        if !probs_ok || !(self.zipf >= 0.0) {
            return bad("topic probabilities must lie in [0, 1] and sum to at most 1");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticCorpus {
    /// Tagged sentences, each labeled with its topic's category.
    pub sentences: Vec<Sentence>,
    /// Words of each topic, seed word first, aligned with [`GoldCategory::PRIOR`].
    pub topic_words: Vec<Vec<String>>,
    pub background_words: Vec<String>,
}

fn zipf_weights(n: usize, s: f64) -> Vec<f64> {
    (1..=n).map(|r| (r as f64).powf(-s)).collect()
}

/// Draws a three-topic corpus labeled Food, Staff, Ambience.
pub fn generate(config: &SyntheticConfig) -> Result<SyntheticCorpus> {
    config.validate()?;
    let topics = GoldCategory::PRIOR;
    let topic_words: Vec<Vec<String>> = topics
        .iter()
        .enumerate()
        .map(|(t, c)| {
            std::iter::once(c.name().to_lowercase())
                .chain((1..config.words_per_topic).map(|i| format!("t{t}w{i:03}")))
                .collect()
        })
        .collect();
    let background_words: Vec<String> = (0..config.background_words).map(|i| format!("bg{i:03}")).collect();

    let in_topic = WeightedIndex::new(zipf_weights(config.words_per_topic, config.zipf))
        .map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let in_background = WeightedIndex::new(zipf_weights(config.background_words, config.zipf))
        .map_err(|e| Error::InvalidArgument(e.to_string()))?;

    let mut rng = SeededRng::new(config.seed).derive("synthetic");
    let mut sentences = Vec::with_capacity(config.sentences);
    for i in 0..config.sentences {
        let topic = rng.below(topics.len());
        let len = config.min_len + rng.below(config.max_len - config.min_len + 1);
        let mut tokens = Vec::with_capacity(len);
        for _ in 0..len {
            let u = rng.uniform(0.0, 1.0);
            let token = if u < config.on_topic + config.cross_topic {
                let t = if u < config.on_topic {
                    topic
                } else {
                    (topic + 1 + rng.below(topics.len() - 1)) % topics.len()
                };
                let w = in_topic.sample(&mut rng);
                // seed words and even ranks are nouns, the rest adjectives
                let pos = if w % 2 == 0 { Pos::Noun } else { Pos::Adj };
                Token { pos: Some(pos), ..Token::new(topic_words[t][w].as_str()) }
            } else {
                let w = in_background.sample(&mut rng);
                let pos = if w % 2 == 0 { Pos::Verb } else { Pos::Other };
                Token { pos: Some(pos), ..Token::new(background_words[w].as_str()) }
            };
            tokens.push(token);
        }
        sentences.push(Sentence {
            id: format!("syn{i:05}"),
            tokens,
            token_ids: Vec::new(),
            annotations: Some(vec![topics[topic]]),
        });
    }
    Ok(SyntheticCorpus { sentences, topic_words, background_words })
}

/// Splits off the last `fraction` of sentences as a held-out set.
pub fn split_holdout(sentences: Vec<Sentence>, fraction: f64) -> Result<(Vec<Sentence>, Vec<Sentence>)> {
    if !(0.0..1.0).contains(&fraction) {
        return Err(Error::InvalidArgument(format!("hold-out fraction {fraction} outside [0, 1)")));
    }
    let cut = sentences.len() - (sentences.len() as f64 * fraction).round() as usize;
    let mut train = sentences;
    let test = train.split_off(cut);
    Ok((train, test))
}

/// A corpus split into train and held-out parts, indexed against
/// embeddings trained on the train part only.
#[derive(Debug, Clone)]
pub struct Prepared<S> {
    pub train: Vec<Sentence>,
    pub test: Vec<Sentence>,
    pub embeddings: EmbeddingMatrix<S>,
}

pub fn prepare<S: Scalar>(sentences: Vec<Sentence>, holdout: f64, sgns: &SgnsConfig) -> Result<Prepared<S>> {
    let (mut train, mut test) = split_holdout(sentences, holdout)?;
    let vocab = Vocabulary::build(&train, 1)?;
    index_all(&mut train, &vocab);
    index_all(&mut test, &vocab);
    let embeddings = train_sgns(&train, &vocab, sgns)?.embeddings;
    Ok(Prepared { train, test, embeddings })
}

/// Gold labels as prior predictions on a random `coverage` share of the
/// sentences, "none" elsewhere.
pub fn oracle_priors(sentences: &[Sentence], coverage: f64, seed: u64) -> Result<Vec<(String, PriorLabel)>> {
    if !(0.0..=1.0).contains(&coverage) {
        return Err(Error::InvalidArgument(format!("coverage {coverage} outside [0, 1]")));
    }
    let mut order: Vec<usize> = (0..sentences.len()).collect();
    SeededRng::new(seed).derive("oracle").shuffle(&mut order);
    let keep = (sentences.len() as f64 * coverage).round() as usize;
    let mut labels = vec![PriorLabel::None; sentences.len()];
    for &i in &order[..keep] {
        let gold = sentences[i].gold().ok_or_else(|| {
            Error::InvalidArgument(format!("sentence `{}` has no gold label", sentences[i].id))
        })?;
        labels[i] = PriorLabel::Category(gold);
    }
    Ok(sentences.iter().map(|s| s.id.clone()).zip(labels).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    fn small() -> SyntheticConfig {
        SyntheticConfig { sentences: 300, ..SyntheticConfig::default() }
    }

    #[test]
    fn topics_are_disjoint_and_seeded() {
        let c = generate(&small()).unwrap();
        assert_eq!(c.topic_words.len(), 3);
        assert_eq!(c.topic_words[0][0], "food");
        assert_eq!(c.topic_words[2][0], "ambience");
        let all: HashSet<&String> = c.topic_words.iter().flatten().collect();
        assert_eq!(all.len(), 600);
    }

    #[test]
    fn sentences_are_labeled_and_tagged() {
        let cfg = small();
        let c = generate(&cfg).unwrap();
        assert_eq!(c.sentences.len(), 300);
        for s in &c.sentences {
            assert!(s.gold().is_some());
            assert!(s.has_pos());
            assert!((cfg.min_len..=cfg.max_len).contains(&s.tokens.len()));
        }
    }

    #[test]
    fn deterministic() {
        assert_eq!(generate(&small()).unwrap(), generate(&small()).unwrap());
        let other = SyntheticConfig { seed: 2, ..small() };
        assert_ne!(generate(&small()).unwrap(), generate(&other).unwrap());
    }

    #[test]
    fn own_topic_dominates() {
        let c = generate(&small()).unwrap();
        let mut own = 0;
        let mut topical = 0;
        for s in &c.sentences {
            let t = GoldCategory::PRIOR.iter().position(|&g| Some(g) == s.gold()).unwrap();
            for tok in &s.tokens {
                if c.topic_words[t].contains(&tok.norm) {
                    own += 1;
                }
                if c.topic_words.iter().any(|ws| ws.contains(&tok.norm)) {
                    topical += 1;
                }
            }
        }
        assert!(own as f64 / topical as f64 > 0.7);
    }

    #[test]
    fn oracle_coverage() {
        let c = generate(&small()).unwrap();
        let p = oracle_priors(&c.sentences, 0.6, 3).unwrap();
        let covered = p.iter().filter(|(_, l)| *l != PriorLabel::None).count();
        assert_eq!(covered, 180);
        for ((id, l), s) in p.iter().zip(&c.sentences) {
            assert_eq!(id, &s.id);
            if let PriorLabel::Category(g) = l {
                assert_eq!(Some(*g), s.gold());
            }
        }
    }

    #[test]
    fn holdout_split() {
        let c = generate(&small()).unwrap();
        let (train, test) = split_holdout(c.sentences, 0.2).unwrap();
        assert_eq!((train.len(), test.len()), (240, 60));
        assert!(generate(&SyntheticConfig { on_topic: 0.9, cross_topic: 0.2, ..small() }).is_err());
    }
}
