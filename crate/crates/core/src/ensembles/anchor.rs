use std::collections::{BTreeMap, HashMap};

use crate::abae::{train, AbaeHyper, TrainOutput};
use crate::cat::PriorLabel;
use crate::corpus::{GoldCategory, Sentence};
use crate::embeddings::EmbeddingMatrix;
use crate::error::{Error, Result};
use crate::numerics::{dot, l2_norm, l2_normalize, Matrix, Scalar, ZERO_NORM_TOL};

/// Per-sentence unit anchors plus the mask of sentences that have one.
#[derive(Debug, Clone, PartialEq)]
pub struct AnchorSet<S> {
    rows: Matrix<S>,
    mask: Vec<bool>,
    sigma: S,
}

impl<S: Scalar> AnchorSet<S> {
    /// Masked-in rows must be unit-norm; masked-out rows are ignored.
    pub fn new(rows: Matrix<S>, mask: Vec<bool>, sigma: S) -> Result<Self> {
        if mask.len() != rows.rows() {
            return Err(Error::Shape(format!("{} mask entries for {} anchor rows", mask.len(), rows.rows())));
        }
        if !(sigma >= S::zero()) || !sigma.is_finite() {
            return Err(Error::InvalidArgument(format!("sigma must be >= 0, got {sigma}")));
        }
        for (i, &m) in mask.iter().enumerate() {
            let n = l2_norm(rows.row(i));
            if m && (n - S::one()).abs() > S::lit(1e-6) {
                return Err(Error::InvalidArgument(format!("anchor {i} has norm {n}, expected 1")));
            }
        }
        Ok(Self { rows, mask, sigma })
    }

    pub fn len(&self) -> usize {
        self.mask.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mask.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.rows.cols()
    }

    pub fn sigma(&self) -> S {
        self.sigma
    }

    pub fn with_sigma(mut self, sigma: S) -> Result<Self> {
        if !(sigma >= S::zero()) || !sigma.is_finite() {
            return Err(Error::InvalidArgument(format!("sigma must be >= 0, got {sigma}")));
        }
        self.sigma = sigma;
        Ok(self)
    }

    pub fn rows(&self) -> &Matrix<S> {
        &self.rows
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    /// Anchor of sentence `i`, if it has one.
    pub fn row(&self, i: usize) -> Option<&[S]> {
        self.mask[i].then(|| self.rows.row(i))
    }

    /// Number of anchored sentences.
    pub fn active(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }
}

/// `(r̂·u − 1)²` and its gradient with respect to `r`, for unit `u`.
pub fn anchor_row<S: Scalar>(r: &[S], u: &[S]) -> Result<(S, Vec<S>)> {
    if r.len() != u.len() {
        return Err(Error::Shape(format!(
            "reconstruction of length {} against anchor of length {}",
            r.len(),
            u.len()
        )));
    }
    let norm = l2_norm(r);
    if norm.as_f64() <= ZERO_NORM_TOL {
        return Err(Error::ZeroNorm);
    }
    let c = dot(r, u) / norm;
    let diff = c - S::one();
    let scale = S::lit(2.0) * diff / norm;
    // ∂c/∂r = (u − c r̂)/‖r‖
    let grad = r.iter().zip(u).map(|(&ri, &ui)| scale * (ui - c * ri / norm)).collect();
    Ok((diff * diff, grad))
}

/// Anchored penalty over a batch of reconstructions: masked rows contribute
/// `(r̂_i·u_i − 1)²`, summed.
pub fn anchored_penalty<S: Scalar>(reconstructions: &Matrix<S>, anchors: &AnchorSet<S>) -> Result<S> {
    if reconstructions.shape() != anchors.rows.shape() {
        return Err(Error::Shape(format!(
            "reconstructions {:?} against anchors {:?}",
            reconstructions.shape(),
            anchors.rows.shape()
        )));
    }
    let mut total = S::zero();
    for i in 0..anchors.len() {
        if let Some(u) = anchors.row(i) {
            total += anchor_row(reconstructions.row(i), u)?.0;
        }
    }
    Ok(total)
}

/// Anchors aligned with `sentences`: the unit label embedding of each
/// sentence's prior label, masked out where the prior says "none".
///
/// Every sentence must have a prior prediction.
pub fn build_anchors<S: Scalar>(
    sentences: &[Sentence],
    priors: &[(String, PriorLabel)],
    labels: &BTreeMap<GoldCategory, Vec<S>>,
    sigma: S,
) -> Result<AnchorSet<S>> {
    let dim = labels.values().next().map(Vec::len).ok_or(Error::Empty("label embeddings"))?;
    let unit: BTreeMap<GoldCategory, Vec<S>> =
        labels.iter().map(|(&c, v)| Ok((c, l2_normalize(v)?))).collect::<Result<_>>()?;
    let by_id: HashMap<&str, PriorLabel> = priors.iter().map(|(id, l)| (id.as_str(), *l)).collect();
    let mut rows = Matrix::zeros(sentences.len(), dim);
    let mut mask = vec![false; sentences.len()];
    for (i, s) in sentences.iter().enumerate() {
        let label = by_id
            .get(s.id.as_str())
            .ok_or_else(|| Error::IdMismatch(format!("no prior prediction for sentence `{}`", s.id)))?;
        if let PriorLabel::Category(c) = label {
            let u =
                unit.get(c).ok_or_else(|| Error::InvalidArgument(format!("no label embedding for {c}")))?;
            if u.len() != dim {
                return Err(Error::Shape("label embeddings differ in dimension".into()));
            }
            rows.row_mut(i).copy_from_slice(u);
            mask[i] = true;
        }
    }
    AnchorSet::new(rows, mask, sigma)
}

/// Trains ABAE with the anchored penalty `σK` added to `J + λU`.
pub fn anchored_train<S: Scalar>(
    sentences: &[Sentence],
    emb: &EmbeddingMatrix<S>,
    hyper: &AbaeHyper,
    anchors: &AnchorSet<S>,
) -> Result<TrainOutput<S>> {
    train(sentences, emb, hyper, Some(anchors))
}
