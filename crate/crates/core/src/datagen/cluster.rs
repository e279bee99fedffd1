use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::stats::{covariance_of, mean_of, ridge_covariance};
use crate::error::{Error, Result};

pub const KMEANS_RESTARTS: usize = 10;
const KMEANS_MAX_ITER: usize = 300;

#[derive(Clone, Debug, PartialEq)]
pub struct ClusterModel {
    /// Zero-based class of each sample.
    pub labels: Vec<usize>,
    pub centers: Vec<DVector<f64>>,
    pub covariances: Vec<DMatrix<f64>>,
    pub counts: Vec<usize>,
    /// Within-cluster sum of squares.
    pub inertia: f64,
}

impl ClusterModel {
    pub fn num_clusters(&self) -> usize {
        self.centers.len()
    }

    /// Row indices assigned to class `c`.
    pub fn members(&self, c: usize) -> Vec<usize> {
        self.labels
            .iter()
            .enumerate()
            .filter(|(_, l)| **l == c)
            .map(|(i, _)| i)
            .collect()
    }

    /// Samples of class `c`, one per row.
    pub fn class_samples(&self, samples: &DMatrix<f64>, c: usize) -> DMatrix<f64> {
        let rows = self.members(c);
        DMatrix::from_fn(rows.len(), samples.ncols(), |i, j| samples[(rows[i], j)])
    }
}

fn sq_dist(samples: &DMatrix<f64>, i: usize, c: &DVector<f64>) -> f64 {
    samples
        .row(i)
        .iter()
        .zip(c.iter())
        .map(|(a, b)| (a - b) * (a - b))
        .sum()
}

/// Farthest-point seeding from a random first center.
fn seed_centers(samples: &DMatrix<f64>, k: usize, rng: &mut ChaCha8Rng) -> Vec<DVector<f64>> {
    let n = samples.nrows();
    let mut centers = vec![samples.row(rng.random_range(0..n)).transpose()];
    let mut nearest: Vec<f64> = (0..n).map(|i| sq_dist(samples, i, &centers[0])).collect();
    while centers.len() < k {
        let far = (0..n).fold(
            0,
            |best, i| if nearest[i] > nearest[best] { i } else { best },
        );
        let c = samples.row(far).transpose();
        for (i, d) in nearest.iter_mut().enumerate() {
            *d = d.min(sq_dist(samples, i, &c));
        }
        centers.push(c);
    }
    centers
}

/// Lloyd iterations; `None` when a cluster empties.
fn lloyd(
    samples: &DMatrix<f64>,
    mut centers: Vec<DVector<f64>>,
) -> Option<(Vec<usize>, Vec<DVector<f64>>, f64)> {
    let n = samples.nrows();
    let k = centers.len();
    let mut labels = vec![usize::MAX; n];
    for _ in 0..KMEANS_MAX_ITER {
        let mut changed = false;
        for i in 0..n {
            let best = (0..k)
                .map(|c| (c, sq_dist(samples, i, &centers[c])))
                .fold((0, f64::INFINITY), |b, x| if x.1 < b.1 { x } else { b })
                .0;
            if labels[i] != best {
                labels[i] = best;
                changed = true;
            }
        }
        for (c, center) in centers.iter_mut().enumerate() {
            let rows: Vec<usize> = (0..n).filter(|i| labels[*i] == c).collect();
            if rows.is_empty() {
                return None;
            }
            *center = mean_of(samples, &rows);
        }
        if !changed {
            break;
        }
    }
    let inertia = (0..n)
        .map(|i| sq_dist(samples, i, &centers[labels[i]]))
        .sum();
    Some((labels, centers, inertia))
}

/// k-means with farthest-point seeding and [`KMEANS_RESTARTS`] restarts; the run with the
/// smallest within-cluster sum of squares is kept.
pub fn cluster_samples(samples: &DMatrix<f64>, m: usize, seed: u64) -> Result<ClusterModel> {
    let n = samples.nrows();
    if m == 0 || n < m {
        return Err(Error::Clustering(format!(
            "need 1 <= m <= N, got m = {m}, N = {n}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<(Vec<usize>, Vec<DVector<f64>>, f64)> = None;
    for _ in 0..KMEANS_RESTARTS {
        let init = seed_centers(samples, m, &mut rng);
        if let Some(run) = lloyd(samples, init) {
            if best.as_ref().is_none_or(|b| run.2 < b.2) {
                best = Some(run);
            }
        }
    }
    let (labels, centers, inertia) =
        best.ok_or_else(|| Error::Clustering("every restart produced an empty cluster".into()))?;

    let p = samples.ncols();
    let groups: Vec<Vec<usize>> = (0..m)
        .map(|c| (0..n).filter(|i| labels[*i] == c).collect())
        .collect();
    let counts: Vec<usize> = groups.iter().map(Vec::len).collect();
    // Classes too small for a covariance borrow the pooled within-class scatter.
    let pooled = {
        let mut s = DMatrix::zeros(p, p);
        for (c, rows) in groups.iter().enumerate() {
            for &r in rows {
                let d = samples.row(r).transpose() - &centers[c];
                s += &d * d.transpose();
            }
        }
        s / ((n as f64 - m as f64).max(1.0))
    };
    let covariances = groups
        .iter()
        .enumerate()
        .map(|(c, rows)| {
            let raw = if rows.len() >= 2 {
                covariance_of(samples, rows, &centers[c])
            } else {
                pooled.clone()
            };
            ridge_covariance(raw).0
        })
        .collect();
    Ok(ClusterModel {
        labels,
        centers,
        covariances,
        counts,
        inertia,
    })
}
