use super::AbaeParams;
use crate::embeddings::EmbeddingMatrix;
use crate::error::{Error, Result};
use crate::numerics::{argmax, axpy, dot, softmax, Matrix, Scalar};

/// Intermediate values of one forward pass, kept for backpropagation.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardTrace<S> {
    /// Unweighted mean of the word vectors.
    pub y_s: Vec<S>,
    /// Attention over the words.
    pub a: Vec<S>,
    /// Attention-weighted sentence embedding.
    pub z_s: Vec<S>,
    /// Aspect distribution.
    pub p_t: Vec<S>,
    /// Reconstruction in embedding space.
    pub r_s: Vec<S>,
}

fn non_empty(ids: &[usize]) -> Result<()> {
    if ids.is_empty() {
        Err(Error::EmptySentence(None))
    } else {
        Ok(())
    }
}

pub fn sentence_average<S: Scalar>(ids: &[usize], emb: &EmbeddingMatrix<S>) -> Result<Vec<S>> {
    non_empty(ids)?;
    let mut y = vec![S::zero(); emb.dim()];
    for &id in ids {
        axpy(S::one(), emb.vector(id), &mut y);
    }
    let n = S::lit(ids.len() as f64);
    y.iter_mut().for_each(|x| *x /= n);
    Ok(y)
}

/// `a = softmax(d)` with `d_i = e_iᵀ · M · y_s`.
pub fn attention<S: Scalar>(
    ids: &[usize],
    emb: &EmbeddingMatrix<S>,
    attention: &Matrix<S>,
) -> Result<Vec<S>> {
    let y = sentence_average(ids, emb)?;
    attention_from_mean(ids, emb, attention, &y)
}

fn attention_from_mean<S: Scalar>(
    ids: &[usize],
    emb: &EmbeddingMatrix<S>,
    attention: &Matrix<S>,
    y: &[S],
) -> Result<Vec<S>> {
    let my = attention.matvec(y)?;
    let logits: Vec<S> = ids.iter().map(|&id| dot(emb.vector(id), &my)).collect();
    softmax(&logits)
}

/// `z_s = Σ a_i e_i`
pub fn weighted_embedding<S: Scalar>(ids: &[usize], a: &[S], emb: &EmbeddingMatrix<S>) -> Result<Vec<S>> {
    if ids.len() != a.len() {
        return Err(Error::Shape(format!("{} attention weights for {} words", a.len(), ids.len())));
    }
    let mut z = vec![S::zero(); emb.dim()];
    for (&id, &w) in ids.iter().zip(a) {
        axpy(w, emb.vector(id), &mut z);
    }
    Ok(z)
}

/// `p_t = softmax(W · z_s + b)`
pub fn aspect_probs<S: Scalar>(z: &[S], projection: &Matrix<S>, bias: &[S]) -> Result<Vec<S>> {
    if bias.len() != projection.rows() {
        return Err(Error::Shape(format!("bias of length {} for {} aspects", bias.len(), projection.rows())));
    }
    let mut logits = projection.matvec(z)?;
    for (l, &b) in logits.iter_mut().zip(bias) {
        *l += b;
    }
    softmax(&logits)
}

/// `r_s = Tᵀ · p_t`
pub fn reconstruct<S: Scalar>(p: &[S], aspects: &Matrix<S>) -> Result<Vec<S>> {
    aspects.matvec_t(p)
}

pub fn forward<S: Scalar>(
    ids: &[usize],
    params: &AbaeParams<S>,
    emb: &EmbeddingMatrix<S>,
) -> Result<ForwardTrace<S>> {
    let y_s = sentence_average(ids, emb)?;
    let a = attention_from_mean(ids, emb, &params.attention, &y_s)?;
    let z_s = weighted_embedding(ids, &a, emb)?;
    let p_t = aspect_probs(&z_s, &params.projection, &params.bias)?;
    let r_s = reconstruct(&p_t, &params.aspects)?;
    Ok(ForwardTrace { y_s, a, z_s, p_t, r_s })
}

/// Predicted aspect (argmax of `p_t`, lowest index on ties) and the full distribution.
pub fn infer<S: Scalar>(
    ids: &[usize],
    params: &AbaeParams<S>,
    emb: &EmbeddingMatrix<S>,
) -> Result<(usize, Vec<S>)> {
    let trace = forward(ids, params, emb)?;
    let aspect = argmax(&trace.p_t).expect("k >= 2");
    Ok((aspect, trace.p_t))
}

/// For each aspect row of `T`, the `n` vocabulary words with the highest
/// cosine to it, descending.
pub fn top_words<S: Scalar>(
    aspects: &Matrix<S>,
    emb: &EmbeddingMatrix<S>,
    n: usize,
) -> Result<Vec<Vec<(String, S)>>> {
    if n > emb.len() {
        return Err(Error::InvalidArgument(format!(
            "asked for {n} words from a vocabulary of {}",
            emb.len()
        )));
    }
    aspects
        .iter_rows()
        .map(|row| {
            if n == 0 {
                return Ok(Vec::new());
            }
            Ok(emb
                .nearest(row, n)?
                .into_iter()
                .map(|(id, c)| (emb.vocab().word(id).to_string(), c))
                .collect())
        })
        .collect()
}
