//! Attention-based aspect extraction.
//!
//! A sentence is encoded as an attention-weighted average of its (frozen)
//! word embeddings, mapped to a distribution over `k` aspects, and
//! reconstructed as the matching mixture of aspect embeddings. Training
//! pulls reconstructions toward the encoded sentence and away from randomly
//! drawn other sentences, while keeping aspect embeddings mutually
//! orthogonal. With an [`AnchorSet`](crate::ensembles::AnchorSet) the
//! anchored penalty is added to the same objective.

mod forward;
mod io;
mod kmeans;
mod objective;
mod train;

pub use forward::{
    aspect_probs, attention, forward, infer, reconstruct, sentence_average, top_words, weighted_embedding,
    ForwardTrace,
};
pub use io::{load_model, save_model, AbaeModel, MODEL_FORMAT_VERSION};
pub use kmeans::{kmeans, KMeansConfig};
pub use objective::{
    batch_objective, hinge_loss, ortho_penalty, ortho_penalty_grad, total_loss, BatchItem, LossParts,
};
pub use train::{init_params, negative_samples, train, Adam, TrainOutput};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{Matrix, Scalar};

/// Learnable parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct AbaeParams<S> {
    /// `T`, `k×d`: one embedding per aspect, in word-embedding space.
    pub aspects: Matrix<S>,
    /// `M`, `d×d`: bilinear form scoring words against the sentence mean.
    pub attention: Matrix<S>,
    /// `W`, `k×d`.
    pub projection: Matrix<S>,
    /// `b`, length `k`.
    pub bias: Vec<S>,
}

impl<S: Scalar> AbaeParams<S> {
    pub fn new(
        aspects: Matrix<S>,
        attention: Matrix<S>,
        projection: Matrix<S>,
        bias: Vec<S>,
    ) -> Result<Self> {
        let (k, d) = aspects.shape();
        if k < 2 {
            return Err(Error::InvalidArgument(format!("need at least 2 aspects, got {k}")));
        }
        if attention.shape() != (d, d) || projection.shape() != (k, d) || bias.len() != k {
            return Err(Error::Shape(format!(
                "T {:?}, M {:?}, W {:?}, b {} are inconsistent",
                aspects.shape(),
                attention.shape(),
                projection.shape(),
                bias.len()
            )));
        }
        let p = Self { aspects, attention, projection, bias };
        if !p.is_finite() {
            return Err(Error::NonFinite("ABAE parameters".into()));
        }
        Ok(p)
    }

    pub fn num_aspects(&self) -> usize {
        self.aspects.rows()
    }

    pub fn dim(&self) -> usize {
        self.aspects.cols()
    }

    pub fn zeros_like(&self) -> Self {
        let (k, d) = self.aspects.shape();
        Self {
            aspects: Matrix::zeros(k, d),
            attention: Matrix::zeros(d, d),
            projection: Matrix::zeros(k, d),
            bias: vec![S::zero(); k],
        }
    }

    pub fn is_finite(&self) -> bool {
        self.aspects.is_finite()
            && self.attention.is_finite()
            && self.projection.is_finite()
            && self.bias.iter().all(|x| x.is_finite())
    }

    /// `[T, M, W, b]` with `b` as a `1×k` matrix.
    pub fn to_tensors(&self) -> Vec<Matrix<S>> {
        vec![
            self.aspects.clone(),
            self.attention.clone(),
            self.projection.clone(),
            Matrix::from_vec(1, self.bias.len(), self.bias.clone()).expect("row vector"),
        ]
    }

    pub fn from_tensors(tensors: &[Matrix<S>]) -> Result<Self> {
        let [t, m, w, b] = tensors else {
            return Err(Error::Shape(format!("expected 4 tensors, got {}", tensors.len())));
        };
        if b.rows() != 1 {
            return Err(Error::Shape("bias must be a row vector".into()));
        }
        Self::new(t.clone(), m.clone(), w.clone(), b.as_slice().to_vec())
    }

    /// Mutable views in the order `T, M, W, b`.
    pub fn slices_mut(&mut self) -> [&mut [S]; 4] {
        [
            self.aspects.as_mut_slice(),
            self.attention.as_mut_slice(),
            self.projection.as_mut_slice(),
            &mut self.bias,
        ]
    }

    pub fn slices(&self) -> [&[S]; 4] {
        [self.aspects.as_slice(), self.attention.as_slice(), self.projection.as_slice(), &self.bias]
    }

    pub fn cast<T: Scalar>(&self) -> AbaeParams<T> {
        AbaeParams {
            aspects: self.aspects.cast(),
            attention: self.attention.cast(),
            projection: self.projection.cast(),
            bias: self.bias.iter().map(|&x| T::lit(x.as_f64())).collect(),
        }
    }
}

/// Training hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AbaeHyper {
    /// Number of aspects.
    pub k: usize,
    /// Weight of the orthogonality penalty.
    pub lambda: f64,
    /// Negative sentences per training sentence.
    pub negatives: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    /// Global gradient-norm clip applied before each optimizer step.
    pub clip_norm: Option<f64>,
    /// Half-width of the uniform initialization of `W` and `b`.
    pub init_scale: f64,
    pub kmeans_restarts: usize,
    pub kmeans_iters: usize,
    pub seed: u64,
}

impl Default for AbaeHyper {
    fn default() -> Self {
        Self {
            k: 14,
            lambda: 1.0,
            negatives: 20,
            epochs: 15,
            batch_size: 50,
            learning_rate: 0.001,
            clip_norm: Some(10.0),
            init_scale: 0.01,
            kmeans_restarts: 10,
            kmeans_iters: 100,
            seed: 1,
        }
    }
}

impl AbaeHyper {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if self.k < 2 {
            return bad(format!("k must be at least 2, got {}", self.k));
        }
        if self.negatives == 0 {
            return bad("at least one negative sample is required".into());
        }
        if !(self.lambda >= 0.0) {
            return bad(format!("λ must be non-negative, got {}", self.lambda));
        }
        if self.epochs == 0 || self.batch_size == 0 {
            return bad("epochs and batch size must be positive".into());
        }
        if !(self.learning_rate > 0.0) {
            return bad("learning rate must be positive".into());
        }
        if self.clip_norm.is_some_and(|c| !(c > 0.0)) {
            return bad("clip norm must be positive".into());
        }
        Ok(())
    }
}
