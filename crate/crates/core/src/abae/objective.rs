//! Loss terms and their analytic gradients.
//!
//! For a batch `B`:
//!
//! ```text
//! L = Σ_s Σ_i max(0, 1 − r_s·z_s + r_s·n_i)  +  λ·U(T)  +  σ·Σ_s mask_s·(r̂_s·u_s − 1)²
//! ```
//!
//! where `n_i` are mean embeddings of negative sentences, `U` is the
//! Frobenius distance of the row-normalized aspect Gram matrix from the
//! identity, and `u_s` is the unit anchor embedding of sentence `s`.

use super::forward::{forward, ForwardTrace};
use super::AbaeParams;
use crate::embeddings::EmbeddingMatrix;
use crate::ensembles::anchor_row;
use crate::error::{Error, Result};
use crate::numerics::{axpy, dot, l2_norm, Matrix, Scalar, ZERO_NORM_TOL};

/// Max-margin loss of one sentence against its negatives.
pub fn hinge_loss<S: Scalar, N: AsRef<[S]>>(r: &[S], z: &[S], negatives: &[N]) -> S {
    let pos = dot(r, z);
    negatives.iter().map(|n| (S::one() - pos + dot(r, n.as_ref())).max(S::zero())).sum()
}

/// `‖T_n·T_nᵀ − I‖_F` with `T_n` the row-normalized aspect matrix.
pub fn ortho_penalty<S: Scalar>(aspects: &Matrix<S>) -> Result<S> {
    Ok(ortho_penalty_grad(aspects)?.0)
}

/// Value and gradient of [`ortho_penalty`] with respect to `T`.
///
/// At `U = 0` the norm is not differentiable; the zero subgradient is used.
pub fn ortho_penalty_grad<S: Scalar>(aspects: &Matrix<S>) -> Result<(S, Matrix<S>)> {
    let (k, d) = aspects.shape();
    let mut normed = aspects.clone();
    let mut norms = Vec::with_capacity(k);
    for i in 0..k {
        let n = l2_norm(aspects.row(i));
        if !(n.as_f64() > ZERO_NORM_TOL) {
            return Err(Error::ZeroNorm);
        }
        normed.row_mut(i).iter_mut().for_each(|x| *x /= n);
        norms.push(n);
    }
    let mut diff = normed.matmul(&normed.transpose())?;
    for i in 0..k {
        diff[(i, i)] -= S::one();
    }
    let u = diff.frobenius_norm();
    let mut grad = Matrix::zeros(k, d);
    if u == S::zero() {
        return Ok((u, grad));
    }
    // dU/dT_n = 2 (G − I) T_n / U, then through the row normalization.
    let g_normed = diff.matmul(&normed)?.map(|x| S::lit(2.0) * x / u);
    for i in 0..k {
        let t_hat = normed.row(i);
        let g = g_normed.row(i);
        let radial = dot(g, t_hat);
        for (j, out) in grad.row_mut(i).iter_mut().enumerate() {
            *out = (g[j] - radial * t_hat[j]) / norms[i];
        }
    }
    Ok((u, grad))
}

/// `J + λU`, plus `σK` when an anchor penalty is supplied.
pub fn total_loss<S: Scalar>(j: S, u: S, lambda: S, anchored: Option<(S, S)>) -> Result<S> {
    if lambda < S::zero() {
        return Err(Error::InvalidArgument(format!("λ must be non-negative, got {lambda}")));
    }
    let mut total = j + lambda * u;
    if let Some((k, sigma)) = anchored {
        if sigma < S::zero() {
            return Err(Error::InvalidArgument(format!("σ must be non-negative, got {sigma}")));
        }
        total += sigma * k;
    }
    Ok(total)
}

/// One training sentence with its sampled negatives and optional anchor.
#[derive(Debug, Clone)]
pub struct BatchItem<'a, S> {
    pub ids: &'a [usize],
    pub negatives: Vec<&'a [S]>,
    /// Unit prior-label embedding; `None` when the sentence is masked out.
    pub anchor: Option<&'a [S]>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossParts<S> {
    pub hinge: S,
    pub ortho: S,
    pub anchor: S,
    pub total: S,
}

/// Batch loss and its gradient with respect to every parameter.
///
/// `sigma` is ignored unless some item carries an anchor.
pub fn batch_objective<S: Scalar>(
    params: &AbaeParams<S>,
    emb: &EmbeddingMatrix<S>,
    batch: &[BatchItem<'_, S>],
    lambda: S,
    sigma: S,
) -> Result<(LossParts<S>, AbaeParams<S>)> {
    let mut grad = params.zeros_like();
    let d = emb.dim();
    let mut hinge = S::zero();
    let mut anchor = S::zero();
    let mut any_anchor = false;

    let mut g_r = vec![S::zero(); d];
    let mut g_z = vec![S::zero(); d];
    for item in batch {
        let trace = forward(item.ids, params, emb)?;
        let ForwardTrace { r_s, z_s, .. } = &trace;

        g_r.iter_mut().for_each(|x| *x = S::zero());
        g_z.iter_mut().for_each(|x| *x = S::zero());

        let pos = dot(r_s, z_s);
        let mut active = 0usize;
        for n in &item.negatives {
            let margin = S::one() - pos + dot(r_s, n);
            if margin > S::zero() {
                hinge += margin;
                active += 1;
                axpy(S::one(), n, &mut g_r);
                axpy(-S::one(), z_s, &mut g_r);
            }
        }
        axpy(-S::lit(active as f64), r_s, &mut g_z);

        if let Some(u) = item.anchor {
            any_anchor = true;
            let (k, g_k) = anchor_row(r_s, u)?;
            anchor += k;
            axpy(sigma, &g_k, &mut g_r);
        }

        backward(item.ids, params, emb, &trace, &g_r, &mut g_z, &mut grad)?;
    }

    let (ortho, g_t) = ortho_penalty_grad(&params.aspects)?;
    axpy(lambda, g_t.as_slice(), grad.aspects.as_mut_slice());

    let total = total_loss(hinge, ortho, lambda, any_anchor.then_some((anchor, sigma)))?;
    Ok((LossParts { hinge, ortho, anchor, total }, grad))
}

/// Accumulates parameter gradients of one sentence given `∂L/∂r_s` and the
/// direct part of `∂L/∂z_s`.
fn backward<S: Scalar>(
    ids: &[usize],
    params: &AbaeParams<S>,
    emb: &EmbeddingMatrix<S>,
    trace: &ForwardTrace<S>,
    g_r: &[S],
    g_z: &mut [S],
    grad: &mut AbaeParams<S>,
) -> Result<()> {
    let ForwardTrace { y_s, a, z_s, p_t, .. } = trace;

    // r = Tᵀ p
    grad.aspects.add_outer(S::one(), p_t, g_r);
    let g_p = params.aspects.matvec(g_r)?;

    // p = softmax(W z + b)
    let pg = dot(p_t, &g_p);
    let g_logits: Vec<S> = p_t.iter().zip(&g_p).map(|(&p, &g)| p * (g - pg)).collect();
    grad.projection.add_outer(S::one(), &g_logits, z_s);
    axpy(S::one(), &g_logits, &mut grad.bias);
    let back = params.projection.matvec_t(&g_logits)?;
    axpy(S::one(), &back, g_z);

    // z = Σ a_i e_i, a = softmax(d), d_i = e_iᵀ M y
    let g_a: Vec<S> = ids.iter().map(|&id| dot(emb.vector(id), g_z)).collect();
    let ag = dot(a, &g_a);
    let mut g_my = vec![S::zero(); emb.dim()];
    for ((&id, &ai), &gai) in ids.iter().zip(a).zip(&g_a) {
        axpy(ai * (gai - ag), emb.vector(id), &mut g_my);
    }
    grad.attention.add_outer(S::one(), &g_my, y_s);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn hinge_examples() {
        // r·z = 1, r·n = 0
        assert_eq!(hinge_loss(&[1.0, 0.0], &[1.0, 0.0], &[[0.0, 1.0], [0.0, -3.0]]), 0.0);
        // r·z = 0, one negative with r·n = 0
        assert_eq!(hinge_loss(&[1.0, 0.0], &[0.0, 1.0], &[[0.0, 1.0]]), 1.0);
        // r·z = 0.5, negatives [0.2, -0.3]
        let j = hinge_loss(&[1.0, 0.0], &[0.5, 0.0], &[[0.2, 7.0], [-0.3, 0.0]]);
        assert_abs_diff_eq!(j, 0.9, epsilon = 1e-15);
    }

    #[test]
    fn ortho_examples() {
        let orth = Matrix::from_rows(&[[0.6, 0.8, 0.0], [-0.8, 0.6, 0.0], [0.0, 0.0, 1.0]]).unwrap();
        assert!(ortho_penalty(&orth).unwrap() < 1e-15);
        let same = Matrix::from_rows(&[[1.0, 0.0], [1.0, 0.0]]).unwrap();
        assert_abs_diff_eq!(ortho_penalty(&same).unwrap(), 2f64.sqrt(), epsilon = 1e-15);
        let t = Matrix::from_rows(&[[1.0, 2.0], [0.5, -0.1], [3.0, 3.0]]).unwrap();
        let mut scaled = t.clone();
        scaled.row_mut(1).iter_mut().for_each(|x| *x *= 5.0);
        assert_abs_diff_eq!(ortho_penalty(&t).unwrap(), ortho_penalty(&scaled).unwrap(), epsilon = 1e-14);
        let zero_row = Matrix::from_rows(&[[1.0, 0.0], [0.0, 0.0]]).unwrap();
        assert!(matches!(ortho_penalty(&zero_row), Err(Error::ZeroNorm)));
    }

    #[test]
    fn exact_zero_for_unit_basis() {
        assert_eq!(ortho_penalty(&Matrix::<f64>::identity(4)).unwrap(), 0.0);
        let (_, g) = ortho_penalty_grad(&Matrix::<f64>::identity(4)).unwrap();
        assert!(g.as_slice().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn total_loss_examples() {
        assert_eq!(total_loss(2.0, 3.0, 1.0, None).unwrap(), 5.0);
        assert_eq!(total_loss(2.0, 3.0, 1.0, Some((17.0, 0.0))).unwrap(), 5.0);
        assert_abs_diff_eq!(total_loss(2.0, 3.0, 1.0, Some((4.0, 0.1))).unwrap(), 5.4, epsilon = 1e-15);
        assert!(total_loss(2.0, 3.0, -1.0, None).is_err());
        assert!(total_loss(2.0, 3.0, 1.0, Some((4.0, -0.1))).is_err());
    }
}
