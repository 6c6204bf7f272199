use super::{Matrix, Scalar};
use crate::error::{Error, Result};

/// Compares analytic gradients against central finite differences.
///
/// Every coordinate of every parameter matrix is perturbed by `±eps`; the
/// parameters are restored afterwards. Returns the largest
/// `|analytic − numeric| / max(1, |analytic|, |numeric|)`.
pub fn grad_check<S, F>(params: &mut [Matrix<S>], analytic: &[Matrix<S>], eps: S, mut loss: F) -> Result<S>
where
    S: Scalar,
    F: FnMut(&[Matrix<S>]) -> S,
{
    let e = eps.as_f64();
    if !(1e-7..=1e-3).contains(&e) {
        return Err(Error::InvalidArgument(format!("finite-difference step {e} outside [1e-7, 1e-3]")));
    }
    if params.len() != analytic.len() {
        return Err(Error::Shape(format!(
            "{} parameter tensors but {} gradients",
            params.len(),
            analytic.len()
        )));
    }
    for (i, (p, g)) in params.iter().zip(analytic).enumerate() {
        if p.shape() != g.shape() {
            return Err(Error::Shape(format!(
                "parameter {i} is {:?} but its gradient is {:?}",
                p.shape(),
                g.shape()
            )));
        }
    }

    let two = S::lit(2.0);
    let mut worst = S::zero();
    for t in 0..params.len() {
        for j in 0..params[t].as_slice().len() {
            let orig = params[t].as_slice()[j];
            params[t].as_mut_slice()[j] = orig + eps;
            let plus = loss(params);
            params[t].as_mut_slice()[j] = orig - eps;
            let minus = loss(params);
            params[t].as_mut_slice()[j] = orig;
            if !(plus.is_finite() && minus.is_finite()) {
                return Err(Error::NonFinite(format!("loss at perturbed coordinate {j} of parameter {t}")));
            }
            let numeric = (plus - minus) / (two * eps);
            let a = analytic[t].as_slice()[j];
            let denom = S::one().max(a.abs()).max(numeric.abs());
            worst = worst.max((a - numeric).abs() / denom);
        }
    }
    Ok(worst)
}
