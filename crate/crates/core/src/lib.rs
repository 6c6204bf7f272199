//! Unsupervised aspect extraction for review text.
//!
//! The crate implements an attention-based aspect autoencoder (ABAE), a
//! contrastive-attention prior that labels sentences as Food, Staff, or
//! Ambience from an RBF-kernel attention over frequent nouns, and two ways to
//! combine them:
//!
//! - a rule-based ensemble that keeps agreeing predictions and resolves
//!   conflicts by noun/adjective similarity to category embeddings, and
//! - anchored regularization, which adds `σ·K(θ)` to the ABAE loss so that
//!   normalized reconstructions are pulled toward the prior's label
//!   embeddings on the sentences the prior is trusted for.
//!
//! All numeric code is generic over [`Scalar`] (`f32` or `f64`). The aliases
//! below fix the scalar to `f64`, which is what training uses by default.

pub mod abae;
pub mod cat;
pub mod corpus;
pub mod embeddings;
pub mod ensembles;
pub mod error;
pub mod evaluation;
pub mod numerics;
pub mod synthetic;

pub use error::{Error, Result};
pub use numerics::{Matrix, Scalar, SeededRng};

pub type Matrix64 = numerics::Matrix<f64>;
pub type Matrix32 = numerics::Matrix<f32>;
pub type Embeddings64 = embeddings::EmbeddingMatrix<f64>;
pub type Embeddings32 = embeddings::EmbeddingMatrix<f32>;
pub type AbaeParams64 = abae::AbaeParams<f64>;
pub type AbaeParams32 = abae::AbaeParams<f32>;
pub type AbaeModel64 = abae::AbaeModel<f64>;
pub type CatModel64 = cat::CatModel<f64>;
pub type AnchorSet64 = ensembles::AnchorSet<f64>;
