use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;

#[derive(Clone, Debug, PartialEq)]
pub struct SampleMoments {
    pub mean: DVector<f64>,
    pub covariance: DMatrix<f64>,
    /// Set when the ridge had to be added.
    pub regularized: bool,
}

/// Unbiased covariance with a ridge `1e-8 trace / n` when it is nearly singular.
pub(crate) fn ridge_covariance(scatter: DMatrix<f64>) -> (DMatrix<f64>, bool) {
    let n = scatter.nrows();
    let trace = scatter.trace();
    let min_eig = linalg::min_eigenvalue(&scatter);
    if min_eig < 1e-10 * trace || trace <= 0.0 {
        let ridge = if trace > 0.0 {
            1e-8 * trace / n as f64
        } else {
            1e-8
        };
        (scatter + DMatrix::identity(n, n) * ridge, true)
    } else {
        (scatter, false)
    }
}

pub(crate) fn mean_of(samples: &DMatrix<f64>, rows: &[usize]) -> DVector<f64> {
    let mut m = DVector::zeros(samples.ncols());
    for &r in rows {
        m += samples.row(r).transpose();
    }
    m / rows.len() as f64
}

pub(crate) fn covariance_of(
    samples: &DMatrix<f64>,
    rows: &[usize],
    mean: &DVector<f64>,
) -> DMatrix<f64> {
    let p = samples.ncols();
    let mut s = DMatrix::zeros(p, p);
    for &r in rows {
        let d = samples.row(r).transpose() - mean;
        s += &d * d.transpose();
    }
    s / (rows.len() as f64 - 1.0)
}

/// Sample mean and unbiased sample covariance (samples one per row).
pub fn sample_moments(samples: &DMatrix<f64>) -> Result<SampleMoments> {
    let n = samples.nrows();
    if n < 2 {
        return Err(Error::Invalid(
            "sample moments need at least 2 samples".into(),
        ));
    }
    let rows: Vec<usize> = (0..n).collect();
    let mean = mean_of(samples, &rows);
    let (covariance, regularized) = ridge_covariance(covariance_of(samples, &rows, &mean));
    Ok(SampleMoments {
        mean,
        covariance,
        regularized,
    })
}

/// Smallest `gamma` such that the ellipsoid `E(mu, sigma, gamma)` holds a fraction `alpha`
/// of the samples: the `ceil(alpha N)`-th smallest squared Mahalanobis distance.
pub fn calibrate_gamma(
    samples: &DMatrix<f64>,
    mu: &DVector<f64>,
    sigma: &DMatrix<f64>,
    alpha: f64,
) -> Result<f64> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::Invalid(format!(
            "coverage must lie in (0, 1], got {alpha}"
        )));
    }
    let n = samples.nrows();
    if n == 0 {
        return Err(Error::Invalid("calibration needs samples".into()));
    }
    let mut levels = (0..n)
        .map(|j| linalg::mahalanobis_sq(&samples.row(j).transpose(), mu, sigma))
        .collect::<Result<Vec<_>>>()?;
    levels.sort_by(f64::total_cmp);
    let k = ((alpha * n as f64) - 1e-9).ceil().clamp(1.0, n as f64) as usize;
    Ok(levels[k - 1].max(0.0))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BootstrapSettings {
    pub resamples: usize,
    pub level: f64,
}

impl Default for BootstrapSettings {
    fn default() -> Self {
        Self {
            resamples: 200,
            level: 0.95,
        }
    }
}

/// Lower bound applied to the second-moment factor.
pub const GAMMA2_FLOOR: f64 = 1.0 + 1e-6;

fn percentile(mut v: Vec<f64>, level: f64) -> f64 {
    v.sort_by(f64::total_cmp);
    let k = ((level * v.len() as f64) - 1e-9)
        .ceil()
        .clamp(1.0, v.len() as f64) as usize;
    v[k - 1]
}

/// Bootstrap estimates `(gamma1, gamma2)` of the moment ambiguity radii around `moments`.
///
/// `gamma1` is the upper percentile of the squared Mahalanobis deviation of resampled means;
/// `gamma2` is the upper percentile of the largest eigenvalue of the whitened resampled
/// second moment about `mean`, floored at [`GAMMA2_FLOOR`].
pub fn bootstrap_moment_bounds(
    samples: &DMatrix<f64>,
    moments: &SampleMoments,
    settings: &BootstrapSettings,
    seed: u64,
) -> Result<(f64, f64)> {
    let n = samples.nrows();
    if n < 2 || settings.resamples == 0 {
        return Err(Error::Invalid(
            "bootstrap needs >= 2 samples and >= 1 resample".into(),
        ));
    }
    let p = samples.ncols();
    let inv_sqrt = linalg::sym_inv_sqrt(&moments.covariance);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut g1 = Vec::with_capacity(settings.resamples);
    let mut g2 = Vec::with_capacity(settings.resamples);
    for _ in 0..settings.resamples {
        let mut mean = DVector::zeros(p);
        let mut second = DMatrix::zeros(p, p);
        for _ in 0..n {
            let d = samples.row(rng.random_range(0..n)).transpose() - &moments.mean;
            mean += &d;
            second += &d * d.transpose();
        }
        mean /= n as f64;
        second /= n as f64;
        g1.push((&inv_sqrt * &mean).norm_squared());
        g2.push(linalg::max_eigenvalue(&(&inv_sqrt * second * &inv_sqrt)));
    }
    Ok((
        percentile(g1, settings.level),
        percentile(g2, settings.level).max(GAMMA2_FLOOR),
    ))
}

/// Average Euclidean distance from each sample to its nearest other sample.
pub fn mean_nearest_neighbor_distance(samples: &DMatrix<f64>) -> Result<f64> {
    let n = samples.nrows();
    if n < 2 {
        return Err(Error::Invalid(
            "nearest-neighbour distance needs >= 2 samples".into(),
        ));
    }
    let mut total = 0.0;
    for i in 0..n {
        let mut best = f64::INFINITY;
        for j in 0..n {
            if i != j {
                best = best.min((samples.row(i) - samples.row(j)).norm());
            }
        }
        total += best;
    }
    Ok(total / n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_point_moments() {
        let s = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, -1.0, 0.0]);
        let m = sample_moments(&s).unwrap();
        assert_eq!(m.mean, DVector::zeros(2));
        assert!((m.covariance[(0, 0)] - 2.0).abs() < 1e-7);
        assert!(m.covariance[(1, 1)] > 0.0 && m.regularized);

        let same = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 1.0, 2.0, 1.0, 2.0]);
        let m = sample_moments(&same).unwrap();
        assert!(m.regularized && linalg::min_eigenvalue(&m.covariance) > 0.0);
        assert!(sample_moments(&DMatrix::zeros(1, 2)).is_err());
    }

    #[test]
    fn calibration_order_statistics() {
        let s = DMatrix::from_column_slice(4, 1, &[1.0, -2.0, 3.0, 0.5]);
        let mu = DVector::zeros(1);
        let sig = DMatrix::identity(1, 1);
        assert_eq!(calibrate_gamma(&s, &mu, &sig, 1.0).unwrap(), 9.0);
        assert_eq!(calibrate_gamma(&s, &mu, &sig, 0.5).unwrap(), 1.0);
        let one = DMatrix::from_row_slice(1, 1, &[0.0]);
        assert_eq!(calibrate_gamma(&one, &mu, &sig, 0.5).unwrap(), 0.0);
    }

    #[test]
    fn nearest_neighbour() {
        let s = DMatrix::from_column_slice(3, 1, &[0.0, 1.0, 3.0]);
        assert!((mean_nearest_neighbor_distance(&s).unwrap() - 4.0 / 3.0).abs() < 1e-12);
    }
}
