use super::kmeans::{kmeans, KMeansConfig};
use super::objective::{batch_objective, BatchItem};
use super::{sentence_average, AbaeHyper, AbaeParams};
use crate::corpus::Sentence;
use crate::embeddings::EmbeddingMatrix;
use crate::ensembles::AnchorSet;
use crate::error::{Error, Result};
use crate::numerics::{Matrix, Scalar, SeededRng};

/// Adaptive-moment optimizer over the four parameter tensors.
#[derive(Debug, Clone)]
pub struct Adam<S> {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    step: i32,
    first: AbaeParams<S>,
    second: AbaeParams<S>,
}

impl<S: Scalar> Adam<S> {
    pub fn new(params: &AbaeParams<S>, learning_rate: f64) -> Self {
        Self {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            step: 0,
            first: params.zeros_like(),
            second: params.zeros_like(),
        }
    }

    pub fn step(&mut self, params: &mut AbaeParams<S>, grad: &AbaeParams<S>) {
        self.step += 1;
        let (b1, b2) = (S::lit(self.beta1), S::lit(self.beta2));
        let c1 = S::one() - S::lit(self.beta1.powi(self.step));
        let c2 = S::one() - S::lit(self.beta2.powi(self.step));
        let lr = S::lit(self.learning_rate);
        let eps = S::lit(self.epsilon);
        let g_all = grad.slices();
        let m_all = self.first.slices_mut();
        let v_all = self.second.slices_mut();
        for (((p, g), m), v) in params.slices_mut().into_iter().zip(g_all).zip(m_all).zip(v_all) {
            for i in 0..p.len() {
                m[i] = b1 * m[i] + (S::one() - b1) * g[i];
                v[i] = b2 * v[i] + (S::one() - b2) * g[i] * g[i];
                let m_hat = m[i] / c1;
                let v_hat = v[i] / c2;
                p[i] -= lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
    }
}

/// `m` uniform draws from `0..corpus_len` for each batch position, never
/// equal to that position's own index.
pub fn negative_samples(
    batch: &[usize],
    corpus_len: usize,
    m: usize,
    rng: &mut SeededRng,
) -> Result<Vec<Vec<usize>>> {
    if corpus_len < 2 {
        return Err(Error::InvalidArgument("negative sampling needs at least two sentences".into()));
    }
    Ok(batch
        .iter()
        .map(|&own| {
            (0..m)
                .map(|_| {
                    let x = rng.below(corpus_len - 1);
                    if x >= own {
                        x + 1
                    } else {
                        x
                    }
                })
                .collect()
        })
        .collect())
}

#[derive(Debug, Clone)]
pub struct TrainOutput<S> {
    pub params: AbaeParams<S>,
    /// Mean per-sentence loss of each epoch.
    pub epoch_losses: Vec<f64>,
    /// Ids of sentences skipped because no token survived vocabulary filtering.
    pub skipped: Vec<String>,
}

/// Random initial parameters: `T` from k-means over the word vectors,
/// `M = I`, small uniform `W` and `b`.
pub fn init_params<S: Scalar>(
    emb: &EmbeddingMatrix<S>,
    hyper: &AbaeHyper,
    rng: &mut SeededRng,
) -> Result<AbaeParams<S>> {
    let config = KMeansConfig { restarts: hyper.kmeans_restarts, max_iters: hyper.kmeans_iters };
    let aspects = kmeans(emb.vectors(), hyper.k, config, rng)?;
    let d = emb.dim();
    let s = hyper.init_scale;
    let projection = Matrix::from_fn(hyper.k, d, |_, _| S::lit(rng.uniform(-s, s)));
    let bias = (0..hyper.k).map(|_| S::lit(rng.uniform(-s, s))).collect();
    AbaeParams::new(aspects, Matrix::identity(d), projection, bias)
}

/// Mini-batch training with frozen embeddings.
///
/// `sentences` must be indexed against `emb`'s vocabulary. When `anchors` is
/// given its rows align with `sentences` and `σ·K` joins the objective.
pub fn train<S: Scalar>(
    sentences: &[Sentence],
    emb: &EmbeddingMatrix<S>,
    hyper: &AbaeHyper,
    anchors: Option<&AnchorSet<S>>,
) -> Result<TrainOutput<S>> {
    hyper.validate()?;
    if let Some(a) = anchors {
        if a.len() != sentences.len() {
            return Err(Error::Shape(format!("{} anchors for {} sentences", a.len(), sentences.len())));
        }
        if a.dim() != emb.dim() {
            return Err(Error::Shape(format!(
                "anchors of dimension {} for embeddings of dimension {}",
                a.dim(),
                emb.dim()
            )));
        }
    }
    let mut kept = Vec::new();
    let mut skipped = Vec::new();
    for (i, s) in sentences.iter().enumerate() {
        if let Some(&bad) = s.token_ids.iter().find(|&&id| id >= emb.len()) {
            return Err(Error::Shape(format!(
                "token id {bad} in sentence `{}` exceeds the vocabulary",
                s.id
            )));
        }
        if s.token_ids.is_empty() {
            skipped.push(s.id.clone());
        } else {
            kept.push(i);
        }
    }
    if kept.len() < 2 {
        return Err(Error::Empty("training corpus (need at least two non-empty sentences)"));
    }

    let mut negative_table = Matrix::<S>::zeros(kept.len(), emb.dim());
    for (row, &i) in kept.iter().enumerate() {
        negative_table.row_mut(row).copy_from_slice(&sentence_average(&sentences[i].token_ids, emb)?);
    }

    let root = SeededRng::new(hyper.seed);
    let mut params = init_params(emb, hyper, &mut root.derive("init"))?;
    let mut rng = root.derive("batches");
    let mut adam = Adam::new(&params, hyper.learning_rate);
    let lambda = S::lit(hyper.lambda);
    let sigma = anchors.map_or(S::zero(), |a| a.sigma());

    let mut order: Vec<usize> = (0..kept.len()).collect();
    let mut epoch_losses = Vec::with_capacity(hyper.epochs);
    for epoch in 0..hyper.epochs {
        rng.shuffle(&mut order);
        let mut epoch_total = 0.0;
        for (b, chunk) in order.chunks(hyper.batch_size).enumerate() {
            let negs = negative_samples(chunk, kept.len(), hyper.negatives, &mut rng)?;
            let batch: Vec<BatchItem<'_, S>> = chunk
                .iter()
                .zip(&negs)
                .map(|(&pos, ns)| BatchItem {
                    ids: &sentences[kept[pos]].token_ids,
                    negatives: ns.iter().map(|&n| negative_table.row(n)).collect(),
                    anchor: anchors.and_then(|a| a.row(kept[pos])),
                })
                .collect();
            let (parts, mut grad) = batch_objective(&params, emb, &batch, lambda, sigma)?;
            let loss = parts.total.as_f64();
            if !loss.is_finite() || !grad.is_finite() {
                return Err(Error::Diverged { epoch: epoch + 1, batch: b + 1, loss });
            }
            if let Some(clip) = hyper.clip_norm {
                clip_global_norm(&mut grad, S::lit(clip));
            }
            adam.step(&mut params, &grad);
            epoch_total += loss;
        }
        epoch_losses.push(epoch_total / kept.len() as f64);
    }
    if !params.is_finite() {
        return Err(Error::Diverged { epoch: hyper.epochs, batch: 0, loss: f64::NAN });
    }
    Ok(TrainOutput { params, epoch_losses, skipped })
}

fn clip_global_norm<S: Scalar>(grad: &mut AbaeParams<S>, max_norm: S) {
    let sq: S = grad.slices().iter().flat_map(|s| s.iter()).map(|&x| x * x).sum();
    let norm = sq.sqrt();
    if norm > max_norm {
        let scale = max_norm / norm;
        for s in grad.slices_mut() {
            s.iter_mut().for_each(|x| *x *= scale);
        }
    }
}
