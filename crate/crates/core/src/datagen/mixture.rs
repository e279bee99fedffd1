use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::chi2::{chi2_cdf, chi2_inv};
use crate::error::{dim_check, Error, Result};
use crate::linalg;
use crate::model::serde_mat;

/// Consecutive rejections tolerated before sampling gives up.
pub const MAX_REJECTIONS: usize = 1_000_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixtureComponent {
    #[serde(with = "serde_mat::vector")]
    pub mean: DVector<f64>,
    #[serde(with = "serde_mat::matrix")]
    pub covariance: DMatrix<f64>,
    pub rho: f64,
}

impl MixtureComponent {
    /// `F_n(rho^2) / F_{n+2}(rho^2)`: inflation of the untruncated normal so the
    /// truncated component keeps covariance `covariance`.
    pub fn variance_scale(&self) -> f64 {
        let n = self.mean.len();
        let r2 = self.rho * self.rho;
        chi2_cdf(r2, n) / chi2_cdf(r2, n + 2)
    }

    /// True when `x` passes the truncation test of this component.
    pub fn in_support(&self, x: &DVector<f64>) -> Result<bool> {
        let r2 = self.rho * self.rho;
        let level = linalg::mahalanobis_sq(x, &self.mean, &self.covariance)?;
        Ok(level <= r2 * self.variance_scale() * (1.0 + 1e-12))
    }
}

/// Equal-weight mixture of truncated normals.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixtureSpec {
    pub components: Vec<MixtureComponent>,
}

/// `rho` with 99% of the untruncated mass inside the truncation ellipsoid.
pub fn default_rho(n: usize) -> f64 {
    chi2_inv(0.99, n).sqrt()
}

/// Variance 25 everywhere, correlation 0.5 between any two products.
fn benchmark_covariance(n: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, n, |i, j| if i == j { 25.0 } else { 12.5 })
}

impl MixtureSpec {
    pub fn new(components: Vec<MixtureComponent>) -> Result<Self> {
        let s = Self { components };
        s.validate()?;
        Ok(s)
    }

    fn from_means(means: &[&[f64]]) -> Self {
        let n = means[0].len();
        let rho = default_rho(n);
        Self {
            components: means
                .iter()
                .map(|m| MixtureComponent {
                    mean: DVector::from_row_slice(m),
                    covariance: benchmark_covariance(n),
                    rho,
                })
                .collect(),
        }
    }

    pub fn bimodal() -> Self {
        Self::from_means(&[&[15.0, 30.0, 45.0], &[45.0, 30.0, 15.0]])
    }

    pub fn trimodal() -> Self {
        Self::from_means(&[
            &[30.0, 60.0, 90.0],
            &[60.0, 90.0, 30.0],
            &[90.0, 30.0, 60.0],
        ])
    }

    pub fn dim(&self) -> usize {
        self.components.first().map_or(0, |c| c.mean.len())
    }

    pub fn num_components(&self) -> usize {
        self.components.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.components.is_empty() {
            return Err(Error::Invalid(
                "mixture needs at least one component".into(),
            ));
        }
        let n = self.dim();
        for (i, c) in self.components.iter().enumerate() {
            dim_check(&format!("component {i} mean"), n, c.mean.len())?;
            dim_check(
                &format!("component {i} covariance"),
                n,
                c.covariance.nrows(),
            )?;
            linalg::require_spd(&c.covariance, "component covariance")?;
            if !(c.rho > 0.0) {
                return Err(Error::Invalid(format!("component {i}: rho must be > 0")));
            }
        }
        Ok(())
    }

    /// Mean of the mixture.
    pub fn mean(&self) -> DVector<f64> {
        let m = self.components.len() as f64;
        self.components
            .iter()
            .fold(DVector::zeros(self.dim()), |acc, c| acc + &c.mean)
            / m
    }
}

/// Samples (one per row) together with the generating component of each.
pub fn sample_mixture_labeled(
    spec: &MixtureSpec,
    n_samples: usize,
    seed: u64,
) -> Result<(DMatrix<f64>, Vec<usize>)> {
    spec.validate()?;
    if n_samples == 0 {
        return Err(Error::Invalid("sample count must be >= 1".into()));
    }
    let n = spec.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let factors: Vec<(DMatrix<f64>, f64)> = spec
        .components
        .iter()
        .map(|c| {
            let l = c.covariance.clone().cholesky().expect("validated SPD").l();
            (l * c.variance_scale().sqrt(), c.rho * c.rho)
        })
        .collect();
    let mut out = DMatrix::zeros(n_samples, n);
    let mut labels = Vec::with_capacity(n_samples);
    for j in 0..n_samples {
        let c = rng.random_range(0..spec.components.len());
        let (l, r2) = &factors[c];
        let mut rejections = 0;
        let z = loop {
            let z = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
            if z.norm_squared() <= *r2 {
                break z;
            }
            rejections += 1;
            if rejections > MAX_REJECTIONS {
                return Err(Error::RejectionStall(rejections));
            }
        };
        let x = &spec.components[c].mean + l * z;
        out.row_mut(j).copy_from(&x.transpose());
        labels.push(c);
    }
    Ok((out, labels))
}

pub fn sample_mixture(spec: &MixtureSpec, n_samples: usize, seed: u64) -> Result<DMatrix<f64>> {
    Ok(sample_mixture_labeled(spec, n_samples, seed)?.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scale_above_one() {
        let c = &MixtureSpec::bimodal().components[0];
        let s = c.variance_scale();
        assert!(s > 1.0 && s < 1.2, "{s}");
    }

    #[test]
    fn samples_respect_truncation_and_seed() {
        let spec = MixtureSpec::trimodal();
        let (a, labels) = sample_mixture_labeled(&spec, 500, 7).unwrap();
        let b = sample_mixture(&spec, 500, 7).unwrap();
        assert_eq!(a, b);
        for j in 0..500 {
            let x = a.row(j).transpose();
            assert!(spec.components[labels[j]].in_support(&x).unwrap());
        }
        assert_ne!(a, sample_mixture(&spec, 500, 8).unwrap());
    }
}
