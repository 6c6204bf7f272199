//! Word embeddings: the `V×d` matrix shared by every model, a skip-gram
//! negative-sampling trainer, and the plain-text interchange format.

mod sgns;
mod text;

pub use sgns::{sigmoid, train_sgns, SgnsConfig, SgnsOutput};
pub use text::{load_text, save_text};

use crate::corpus::Vocabulary;
use crate::error::{Error, Result};
use crate::numerics::{cosine, Matrix, Scalar};

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix<S> {
    vocab: Vocabulary,
    vectors: Matrix<S>,
}

impl<S: Scalar> EmbeddingMatrix<S> {
    pub fn new(vocab: Vocabulary, vectors: Matrix<S>) -> Result<Self> {
        if vectors.rows() != vocab.len() {
            return Err(Error::Shape(format!(
                "{} vectors for a vocabulary of {} words",
                vectors.rows(),
                vocab.len()
            )));
        }
        if vectors.cols() < 2 {
            return Err(Error::InvalidArgument(format!(
                "embedding dimension must be at least 2, got {}",
                vectors.cols()
            )));
        }
        if !vectors.is_finite() {
            return Err(Error::NonFinite("embedding matrix".into()));
        }
        Ok(Self { vocab, vectors })
    }

    pub fn dim(&self) -> usize {
        self.vectors.cols()
    }

    pub fn len(&self) -> usize {
        self.vectors.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn vectors(&self) -> &Matrix<S> {
        &self.vectors
    }

    #[inline]
    pub fn vector(&self, id: usize) -> &[S] {
        self.vectors.row(id)
    }

    /// Vector for `word`; fails for out-of-vocabulary words.
    pub fn lookup(&self, word: &str) -> Result<&[S]> {
        Ok(self.vector(self.vocab.require(word)?))
    }

    /// The `n` vocabulary ids with the highest cosine to `query`, descending;
    /// ties go to the lower id. Zero rows are skipped.
    pub fn nearest(&self, query: &[S], n: usize) -> Result<Vec<(usize, S)>> {
        if n > self.len() {
            return Err(Error::InvalidArgument(format!(
                "asked for {n} neighbours from a vocabulary of {}",
                self.len()
            )));
        }
        let mut scored = Vec::with_capacity(self.len());
        for id in 0..self.len() {
            match cosine(query, self.vector(id)) {
                Ok(c) => scored.push((id, c)),
                Err(Error::ZeroNorm) if crate::numerics::l2_norm(query).as_f64() > 0.0 => {}
                Err(e) => return Err(e),
            }
        }
        scored.sort_by(|a, b| b.1.partial_cmp(&a.1).expect("finite").then(a.0.cmp(&b.0)));
        scored.truncate(n);
        Ok(scored)
    }

    pub fn cast<T: Scalar>(&self) -> EmbeddingMatrix<T> {
        EmbeddingMatrix { vocab: self.vocab.clone(), vectors: self.vectors.cast() }
    }
}
