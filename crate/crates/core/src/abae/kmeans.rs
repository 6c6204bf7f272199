//! Seeded k-means used to initialize the aspect matrix.

use crate::error::{Error, Result};
use crate::numerics::{Matrix, Scalar, SeededRng};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KMeansConfig {
    pub restarts: usize,
    pub max_iters: usize,
}

impl Default for KMeansConfig {
    fn default() -> Self {
        Self { restarts: 10, max_iters: 100 }
    }
}

fn sq_dist<S: Scalar>(a: &[S], b: &[S]) -> S {
    a.iter().zip(b).map(|(&x, &y)| (x - y) * (x - y)).sum()
}

fn nearest<S: Scalar>(point: &[S], centroids: &Matrix<S>) -> (usize, S) {
    let mut best = (0, S::infinity());
    for (c, row) in centroids.iter_rows().enumerate() {
        let d = sq_dist(point, row);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

/// k-means++ seeding followed by Lloyd iterations; the restart with the
/// lowest inertia wins. Returns the `k×d` centroid matrix.
pub fn kmeans<S: Scalar>(
    points: &Matrix<S>,
    k: usize,
    config: KMeansConfig,
    rng: &mut SeededRng,
) -> Result<Matrix<S>> {
    let n = points.rows();
    if k == 0 || n < k {
        return Err(Error::InvalidArgument(format!("cannot form {k} clusters from {n} points")));
    }
    let mut best: Option<(S, Matrix<S>)> = None;
    for _ in 0..config.restarts.max(1) {
        let (inertia, centroids) = run_once(points, k, config.max_iters, rng);
        if best.as_ref().is_none_or(|(b, _)| inertia < *b) {
            best = Some((inertia, centroids));
        }
    }
    Ok(best.expect("at least one restart").1)
}

fn run_once<S: Scalar>(
    points: &Matrix<S>,
    k: usize,
    max_iters: usize,
    rng: &mut SeededRng,
) -> (S, Matrix<S>) {
    let n = points.rows();
    let d = points.cols();
    let mut centroids = Matrix::zeros(k, d);
    centroids.row_mut(0).copy_from_slice(points.row(rng.below(n)));
    let mut closest: Vec<S> = (0..n).map(|i| sq_dist(points.row(i), centroids.row(0))).collect();
    for c in 1..k {
        let total: f64 = closest.iter().map(|x| x.as_f64()).sum();
        let pick = if total > 0.0 {
            let mut u = rng.uniform(0.0, total);
            let mut chosen = n - 1;
            for (i, w) in closest.iter().enumerate() {
                u -= w.as_f64();
                if u < 0.0 {
                    chosen = i;
                    break;
                }
            }
            chosen
        } else {
            rng.below(n)
        };
        centroids.row_mut(c).copy_from_slice(points.row(pick));
        for (i, cl) in closest.iter_mut().enumerate() {
            *cl = cl.min(sq_dist(points.row(i), centroids.row(c)));
        }
    }

    let mut assign = vec![usize::MAX; n];
    for _ in 0..max_iters {
        let mut changed = false;
        for (i, a) in assign.iter_mut().enumerate() {
            let (c, _) = nearest(points.row(i), &centroids);
            if *a != c {
                *a = c;
                changed = true;
            }
        }
        if !changed {
            break;
        }
        let mut sums = Matrix::<S>::zeros(k, d);
        let mut counts = vec![0usize; k];
        for (i, &c) in assign.iter().enumerate() {
            counts[c] += 1;
            for (s, &x) in sums.row_mut(c).iter_mut().zip(points.row(i)) {
                *s += x;
            }
        }
        for c in 0..k {
            if counts[c] == 0 {
                // reseed an empty cluster at the point farthest from its centroid
                let far = (0..n)
                    .max_by(|&a, &b| {
                        let da = sq_dist(points.row(a), centroids.row(assign[a]));
                        let db = sq_dist(points.row(b), centroids.row(assign[b]));
                        da.partial_cmp(&db).expect("finite").then(b.cmp(&a))
                    })
                    .expect("n >= k");
                centroids.row_mut(c).copy_from_slice(points.row(far));
                assign[far] = c;
            } else {
                let cnt = S::lit(counts[c] as f64);
                for (dst, &s) in centroids.row_mut(c).iter_mut().zip(sums.row(c)) {
                    *dst = s / cnt;
                }
            }
        }
    }
    let inertia = (0..n).map(|i| nearest(points.row(i), &centroids).1).sum();
    (inertia, centroids)
}
