use serde::{Deserialize, Serialize};

use super::EmbeddingMatrix;
use crate::corpus::{Sentence, Vocabulary};
use crate::error::{Error, Result};
use crate::numerics::{dot, Matrix, Scalar, SeededRng};

/// Upper bound on `2·V·d` parameters held during training.
const MAX_PARAMS: usize = 1 << 31;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SgnsConfig {
    pub dim: usize,
    pub window: usize,
    pub negatives: usize,
    pub epochs: usize,
    /// Initial step size, decayed linearly to near zero over training.
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for SgnsConfig {
    fn default() -> Self {
        Self { dim: 200, window: 5, negatives: 5, epochs: 5, learning_rate: 0.025, seed: 1 }
    }
}

impl SgnsConfig {
    fn validate(&self) -> Result<()> {
        if self.dim < 2 || self.window == 0 || self.negatives == 0 || self.epochs == 0 {
            return Err(Error::InvalidArgument(format!(
                "skip-gram dim >= 2 and positive window/negatives/epochs required: {self:?}"
            )));
        }
        if !(self.learning_rate > 0.0) {
            return Err(Error::InvalidArgument("learning rate must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SgnsOutput<S> {
    pub embeddings: EmbeddingMatrix<S>,
    /// Mean negative-sampling log-loss per (center, context) pair, per epoch.
    pub epoch_losses: Vec<f64>,
}

#[inline]
pub fn sigmoid<S: Scalar>(x: S) -> S {
    S::one() / (S::one() + (-x).exp())
}

/// Samples word ids proportionally to `count^0.75`.
struct UnigramTable {
    cumulative: Vec<f64>,
}

impl UnigramTable {
    fn new(counts: &[u64]) -> Self {
        let mut acc = 0.0;
        let cumulative = counts
            .iter()
            .map(|&c| {
                acc += (c as f64).powf(0.75);
                acc
            })
            .collect();
        Self { cumulative }
    }

    fn sample(&self, rng: &mut SeededRng) -> usize {
        let total = *self.cumulative.last().expect("non-empty table");
        let u = rng.uniform(0.0, total);
        self.cumulative.partition_point(|&c| c <= u).min(self.cumulative.len() - 1)
    }
}

/// Skip-gram with negative sampling over the indexed sentences.
///
/// Sentences must already be indexed against `vocab`. Training is
/// single-threaded, so a fixed seed reproduces the output bit for bit.
/// Returns the input-vector table.
pub fn train_sgns<S: Scalar>(
    sentences: &[Sentence],
    vocab: &Vocabulary,
    config: &SgnsConfig,
) -> Result<SgnsOutput<S>> {
    config.validate()?;
    let v = vocab.len();
    if v == 0 {
        return Err(Error::Empty("vocabulary"));
    }
    let d = config.dim;
    if v.checked_mul(d).and_then(|n| n.checked_mul(2)).is_none_or(|n| n > MAX_PARAMS) {
        return Err(Error::InvalidArgument(format!("{v}x{d} embeddings exceed the memory budget")));
    }
    let mut counts = vec![0u64; v];
    let mut total_tokens = 0usize;
    for s in sentences {
        for &id in &s.token_ids {
            if id >= v {
                return Err(Error::Shape(format!(
                    "token id {id} outside a vocabulary of {v} in sentence `{}`",
                    s.id
                )));
            }
            counts[id] += 1;
        }
        total_tokens += s.token_ids.len();
    }
    if total_tokens == 0 {
        return Err(Error::Empty("corpus"));
    }
    let table = UnigramTable::new(&counts);

    let mut rng = SeededRng::new(config.seed);
    let scale = 0.5 / d as f64;
    let mut input = Matrix::from_fn(v, d, |_, _| S::lit(rng.uniform(-scale, scale)));
    let mut output = Matrix::<S>::zeros(v, d);
    let mut grad_in = vec![S::zero(); d];
    let mut center_vec = vec![S::zero(); d];

    let total_steps = (config.epochs * total_tokens) as f64;
    let mut step = 0usize;
    let mut epoch_losses = Vec::with_capacity(config.epochs);

    for _ in 0..config.epochs {
        let mut loss_sum = 0.0;
        let mut pairs = 0usize;
        for s in sentences {
            let ids = &s.token_ids;
            for (i, &center) in ids.iter().enumerate() {
                let lr = config.learning_rate * (1.0 - step as f64 / total_steps).max(1e-4);
                let lr = S::lit(lr);
                step += 1;
                let reach = config.window - rng.below(config.window);
                let lo = i.saturating_sub(reach);
                let hi = (i + reach).min(ids.len() - 1);
                for (j, &context) in ids.iter().enumerate().take(hi + 1).skip(lo) {
                    if j == i {
                        continue;
                    }
                    grad_in.iter_mut().for_each(|g| *g = S::zero());
                    center_vec.copy_from_slice(input.row(center));
                    for n in 0..=config.negatives {
                        let (target, label) = if n == 0 {
                            (context, S::one())
                        } else {
                            let t = table.sample(&mut rng);
                            if t == context {
                                continue;
                            }
                            (t, S::zero())
                        };
                        let score = dot(&center_vec, output.row(target));
                        let p = sigmoid(score);
                        let fit = if label == S::one() { p } else { S::one() - p };
                        loss_sum -= fit.as_f64().max(1e-300).ln();
                        let g = (label - p) * lr;
                        for k in 0..d {
                            grad_in[k] += g * output[(target, k)];
                        }
                        for (o, &x) in output.row_mut(target).iter_mut().zip(&center_vec) {
                            *o += g * x;
                        }
                    }
                    for (x, g) in input.row_mut(center).iter_mut().zip(&grad_in) {
                        *x += *g;
                    }
                    pairs += 1;
                }
            }
        }
        epoch_losses.push(if pairs == 0 { 0.0 } else { loss_sum / pairs as f64 });
    }

    if !input.is_finite() {
        return Err(Error::NonFinite("skip-gram input vectors".into()));
    }
    Ok(SgnsOutput { embeddings: EmbeddingMatrix::new(vocab.clone(), input)?, epoch_losses })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{index_all, Stopwords};
    use crate::numerics::cosine;

    #[test]
    fn sigmoid_at_zero() {
        assert_eq!(sigmoid(0.0f64), 0.5);
        assert_eq!(sigmoid(0.0f32), 0.5);
    }

    #[test]
    fn unigram_table_respects_weights() {
        let table = UnigramTable::new(&[0, 16, 0]);
        let mut rng = SeededRng::new(3);
        for _ in 0..100 {
            assert_eq!(table.sample(&mut rng), 1);
        }
    }

    /// "alpha" and "beta" always share sentences; "gamma" never meets "alpha".
    fn cooccurrence_corpus() -> (Vec<Sentence>, Vocabulary) {
        let sw = Stopwords::none();
        let mut rng = SeededRng::new(11);
        let left = ["x1", "x2", "x3", "x4"];
        let right = ["y1", "y2", "y3", "y4"];
        let mut sentences = Vec::new();
        for i in 0..600 {
            let text = if i % 2 == 0 {
                format!("alpha {} beta {}", left[rng.below(4)], left[rng.below(4)])
            } else {
                format!("gamma {} {} {}", right[rng.below(4)], right[rng.below(4)], right[rng.below(4)])
            };
            sentences.push(Sentence::from_text(i.to_string(), &text, &sw));
        }
        let vocab = Vocabulary::build(&sentences, 1).unwrap();
        index_all(&mut sentences, &vocab);
        (sentences, vocab)
    }

    fn config() -> SgnsConfig {
        SgnsConfig { dim: 16, window: 3, negatives: 5, epochs: 10, learning_rate: 0.05, seed: 5 }
    }

    #[test]
    fn cooccurring_words_end_up_closer() {
        let (sentences, vocab) = cooccurrence_corpus();
        let out = train_sgns::<f64>(&sentences, &vocab, &config()).unwrap();
        let e = &out.embeddings;
        let ab = cosine(e.lookup("alpha").unwrap(), e.lookup("beta").unwrap()).unwrap();
        let ag = cosine(e.lookup("alpha").unwrap(), e.lookup("gamma").unwrap()).unwrap();
        assert!(ab > ag, "cos(alpha,beta)={ab} cos(alpha,gamma)={ag}");
    }

    #[test]
    fn deterministic_under_seed() {
        let (sentences, vocab) = cooccurrence_corpus();
        let a = train_sgns::<f64>(&sentences, &vocab, &config()).unwrap();
        let b = train_sgns::<f64>(&sentences, &vocab, &config()).unwrap();
        assert_eq!(a.embeddings, b.embeddings);
        assert_eq!(a.epoch_losses, b.epoch_losses);
    }

    #[test]
    fn loss_trends_down() {
        let (sentences, vocab) = cooccurrence_corpus();
        let out = train_sgns::<f64>(&sentences, &vocab, &config()).unwrap();
        let l = &out.epoch_losses;
        // smoothed over windows of three epochs
        let smooth: Vec<f64> = l.windows(3).map(|w| w.iter().sum::<f64>() / 3.0).collect();
        for w in smooth.windows(2) {
            assert!(w[1] <= w[0] + 1e-9, "{l:?}");
        }
    }

    #[test]
    fn errors() {
        let (sentences, vocab) = cooccurrence_corpus();
        assert!(train_sgns::<f64>(&[], &vocab, &config()).is_err());
        let bad = SgnsConfig { dim: 1, ..config() };
        assert!(train_sgns::<f64>(&sentences, &vocab, &bad).is_err());
        let huge = SgnsConfig { dim: 1 << 30, ..config() };
        assert!(matches!(train_sgns::<f64>(&sentences, &vocab, &huge), Err(Error::InvalidArgument(_))));
    }
}
