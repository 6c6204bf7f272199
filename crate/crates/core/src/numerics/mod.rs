//! Dense linear algebra and elementary kernels shared by every model.
//!
//! Everything here is generic over [`Scalar`] so the same code runs in
//! `f64` (the training default) and `f32`.

mod gradcheck;
mod matrix;
mod rng;
mod scalar;

pub use gradcheck::grad_check;
pub use matrix::Matrix;
pub use rng::{derive_seed, SeededRng};
pub use scalar::Scalar;

use crate::error::{Error, Result};

/// Norms at or below this are treated as zero.
pub const ZERO_NORM_TOL: f64 = 1e-12;

#[inline]
pub fn dot<S: Scalar>(a: &[S], b: &[S]) -> S {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

#[inline]
pub fn l2_norm<S: Scalar>(v: &[S]) -> S {
    dot(v, v).sqrt()
}

/// `y += alpha · x`
#[inline]
pub fn axpy<S: Scalar>(alpha: S, x: &[S], y: &mut [S]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Numerically stable softmax (max-subtracted).
pub fn softmax<S: Scalar>(v: &[S]) -> Result<Vec<S>> {
    if v.is_empty() {
        return Err(Error::Empty("softmax input"));
    }
    let max = v.iter().copied().fold(S::neg_infinity(), S::max);
    if !max.is_finite() {
        return Err(Error::NonFinite("softmax input".into()));
    }
    let mut out: Vec<S> = v.iter().map(|&x| (x - max).exp()).collect();
    let total: S = out.iter().copied().sum();
    out.iter_mut().for_each(|x| *x /= total);
    Ok(out)
}

pub fn l2_normalize<S: Scalar>(v: &[S]) -> Result<Vec<S>> {
    let norm = l2_norm(v);
    if !(norm.as_f64() > ZERO_NORM_TOL) {
        return Err(Error::ZeroNorm);
    }
    Ok(v.iter().map(|&x| x / norm).collect())
}

/// Cosine similarity, clamped to `[-1, 1]` against rounding.
pub fn cosine<S: Scalar>(a: &[S], b: &[S]) -> Result<S> {
    if a.len() != b.len() {
        return Err(Error::Shape(format!("cosine of vectors with lengths {} and {}", a.len(), b.len())));
    }
    let (na, nb) = (l2_norm(a), l2_norm(b));
    if !(na.as_f64() > ZERO_NORM_TOL && nb.as_f64() > ZERO_NORM_TOL) {
        return Err(Error::ZeroNorm);
    }
    let c = dot(a, b) / (na * nb);
    Ok(c.max(-S::one()).min(S::one()))
}

/// Gaussian RBF kernel `exp(-gamma · ‖a − b‖²)`.
pub fn rbf<S: Scalar>(a: &[S], b: &[S], gamma: S) -> Result<S> {
    if !(gamma > S::zero()) {
        return Err(Error::InvalidArgument(format!("rbf gamma must be positive, got {gamma}")));
    }
    if a.len() != b.len() {
        return Err(Error::Shape(format!("rbf of vectors with lengths {} and {}", a.len(), b.len())));
    }
    let sq: S = a.iter().zip(b).map(|(&x, &y)| (x - y) * (x - y)).sum();
    Ok((-gamma * sq).exp())
}

/// Index of the largest entry; ties go to the lowest index.
pub fn argmax<S: Scalar>(v: &[S]) -> Option<usize> {
    let mut best: Option<(usize, S)> = None;
    for (i, &x) in v.iter().enumerate() {
        match best {
            Some((_, b)) if x <= b => {}
            _ => best = Some((i, x)),
        }
    }
    best.map(|(i, _)| i)
}
