use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::cluster::{cluster_samples, ClusterModel};
use super::stats::{
    bootstrap_moment_bounds, calibrate_gamma, mean_nearest_neighbor_distance, sample_moments,
    BootstrapSettings, SampleMoments,
};
use crate::conic::NormIndex;
use crate::error::{Error, Result};
use crate::model::{
    AmbiguitySpec, CoreSetSpec, DistanceSpec, Ellipsoid, MgdroProblem, UncertaintyRegion,
};
use crate::newsvendor::{newsvendor_feasible_set, newsvendor_objective, PriceVector};

/// Relative margin added when a sample space must be widened to hold the core sets.
const SPACE_MARGIN: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum ModelName {
    Sp,
    DroM1,
    DroM2G2,
    DroM2G1,
    DroW1,
    DroW2,
    GdroM1,
    GdroM2,
    MgdroM1,
    MgdroM2,
    MgdroW1,
    MgdroW2,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModelFamily {
    SampleAverage,
    Moment,
    Wasserstein,
}

impl ModelName {
    pub const ALL: [ModelName; 12] = [
        ModelName::Sp,
        ModelName::DroM1,
        ModelName::DroM2G2,
        ModelName::DroM2G1,
        ModelName::DroW1,
        ModelName::DroW2,
        ModelName::GdroM1,
        ModelName::GdroM2,
        ModelName::MgdroM1,
        ModelName::MgdroM2,
        ModelName::MgdroW1,
        ModelName::MgdroW2,
    ];

    /// The comparison suite: everything except the optional `DRO-M2(g1)`.
    pub fn default_suite() -> Vec<ModelName> {
        Self::ALL
            .iter()
            .copied()
            .filter(|m| *m != ModelName::DroM2G1)
            .collect()
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            ModelName::Sp => "SP",
            ModelName::DroM1 => "DRO-M1",
            ModelName::DroM2G2 => "DRO-M2(g2)",
            ModelName::DroM2G1 => "DRO-M2(g1)",
            ModelName::DroW1 => "DRO-W1",
            ModelName::DroW2 => "DRO-W2(g2)",
            ModelName::GdroM1 => "GDRO-M1",
            ModelName::GdroM2 => "GDRO-M2",
            ModelName::MgdroM1 => "MGDRO-M1",
            ModelName::MgdroM2 => "MGDRO-M2",
            ModelName::MgdroW1 => "MGDRO-W1",
            ModelName::MgdroW2 => "MGDRO-W2",
        }
    }

    pub fn family(&self) -> ModelFamily {
        use ModelName::*;
        match self {
            Sp => ModelFamily::SampleAverage,
            DroM1 | DroM2G2 | DroM2G1 | GdroM1 | GdroM2 | MgdroM1 | MgdroM2 => ModelFamily::Moment,
            DroW1 | DroW2 | MgdroW1 | MgdroW2 => ModelFamily::Wasserstein,
        }
    }

    /// Models with a penalty weight to tune.
    pub fn uses_theta(&self) -> bool {
        use ModelName::*;
        matches!(
            self,
            GdroM1 | GdroM2 | MgdroM1 | MgdroM2 | MgdroW1 | MgdroW2
        )
    }

    /// Models with a Wasserstein radius to tune.
    pub fn uses_radius(&self) -> bool {
        self.family() == ModelFamily::Wasserstein
    }

    fn bounded_space(&self) -> bool {
        use ModelName::*;
        matches!(self, DroM2G2 | DroM2G1 | DroW2 | GdroM2 | MgdroM2 | MgdroW2)
    }
}

impl fmt::Display for ModelName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelName {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        ModelName::ALL
            .iter()
            .copied()
            .find(|m| m.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::Invalid(format!("unknown model name {s:?}")))
    }
}

impl From<ModelName> for String {
    fn from(m: ModelName) -> String {
        m.as_str().to_string()
    }
}

impl TryFrom<String> for ModelName {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

/// Settings shared by every model of a suite.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteConfig {
    pub prices: PriceVector,
    pub epsilon: f64,
    /// Number of core sets (modes) looked for by clustering.
    pub modes: usize,
    /// Fraction of samples inside each core set and inside the small sample space.
    pub core_coverage: f64,
    pub wasserstein_norm: NormIndex,
    pub bootstrap: BootstrapSettings,
}

impl SuiteConfig {
    pub fn benchmark(modes: usize) -> Self {
        Self {
            prices: PriceVector::benchmark(3),
            epsilon: 0.05,
            modes,
            core_coverage: 0.5,
            wasserstein_norm: NormIndex::Two,
            bootstrap: BootstrapSettings::default(),
        }
    }
}

/// Statistics of one training sample that the model suite is built from.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleSummary {
    pub moments: SampleMoments,
    /// Moment ambiguity radii.
    pub gamma1: f64,
    pub gamma2: f64,
    /// Coverage-calibrated radii of `E(mu0, Sigma0, .)`.
    pub gamma_bar1: f64,
    pub gamma_bar2: f64,
    pub clusters: ClusterModel,
    /// Coverage-calibrated radius of each class ellipsoid.
    pub class_gammas: Vec<f64>,
    pub nn_distance: f64,
}

impl SampleSummary {
    pub fn from_samples(samples: &DMatrix<f64>, config: &SuiteConfig, seed: u64) -> Result<Self> {
        let moments = sample_moments(samples)?;
        let (gamma1, gamma2) = bootstrap_moment_bounds(samples, &moments, &config.bootstrap, seed)?;
        let gamma_bar1 = calibrate_gamma(
            samples,
            &moments.mean,
            &moments.covariance,
            config.core_coverage,
        )?;
        let gamma_bar2 = calibrate_gamma(samples, &moments.mean, &moments.covariance, 1.0)?;
        let clusters = cluster_samples(samples, config.modes, seed ^ 0x9e37_79b9_7f4a_7c15)?;
        let class_gammas = (0..clusters.num_clusters())
            .map(|c| {
                calibrate_gamma(
                    &clusters.class_samples(samples, c),
                    &clusters.centers[c],
                    &clusters.covariances[c],
                    config.core_coverage,
                )
            })
            .collect::<Result<Vec<_>>>()?;
        let nn_distance = mean_nearest_neighbor_distance(samples)?;
        Ok(Self {
            moments,
            gamma1,
            gamma2,
            gamma_bar1,
            gamma_bar2,
            clusters,
            class_gammas,
            nn_distance,
        })
    }

    fn ellipsoid0(&self, gamma: f64) -> Result<Ellipsoid> {
        Ellipsoid::new(
            self.moments.mean.clone(),
            self.moments.covariance.clone(),
            gamma,
        )
    }

    /// Per-class core ellipsoids `E(mu_i, Sigma_i, gamma_1i)`.
    pub fn class_ellipsoids(&self) -> Result<Vec<Ellipsoid>> {
        (0..self.clusters.num_clusters())
            .map(|c| {
                Ellipsoid::new(
                    self.clusters.centers[c].clone(),
                    self.clusters.covariances[c].clone(),
                    self.class_gammas[c],
                )
            })
            .collect()
    }
}

/// Hyperparameters of one model; unused entries are ignored.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub theta: Option<f64>,
    pub radius: Option<f64>,
}

fn required(v: Option<f64>, what: &str, name: ModelName) -> Result<f64> {
    v.ok_or_else(|| Error::Invalid(format!("{name} needs a {what}")))
}

/// Builds one named model of the suite on the given training samples.
///
/// `SP` is returned as the zero-radius Wasserstein model over the whole space.
pub fn build_model(
    name: ModelName,
    samples: &DMatrix<f64>,
    summary: &SampleSummary,
    config: &SuiteConfig,
    params: &ModelParams,
) -> Result<MgdroProblem> {
    let n = config.prices.len();
    let objective = newsvendor_objective(&config.prices, n, config.epsilon)?;
    let feasible_set = newsvendor_feasible_set(n);
    let moment = AmbiguitySpec::Moment {
        mu0: summary.moments.mean.clone(),
        sigma0: summary.moments.covariance.clone(),
        gamma1: summary.gamma1,
        gamma2: summary.gamma2,
    };
    let wasserstein = |radius: f64| AmbiguitySpec::Wasserstein {
        samples: samples.clone(),
        radius,
        norm: config.wasserstein_norm,
    };
    let ambiguity = match name.family() {
        ModelFamily::SampleAverage => wasserstein(0.0),
        ModelFamily::Moment => moment,
        ModelFamily::Wasserstein => wasserstein(required(params.radius, "radius", name)?),
    };

    let core_sets = match name {
        ModelName::GdroM1 | ModelName::GdroM2 => vec![CoreSetSpec::new(
            UncertaintyRegion::Ellipsoid(summary.ellipsoid0(summary.gamma_bar1)?),
            required(params.theta, "theta", name)?,
            DistanceSpec::euclidean(),
        )?],
        ModelName::MgdroM1 | ModelName::MgdroM2 | ModelName::MgdroW1 | ModelName::MgdroW2 => {
            let theta = required(params.theta, "theta", name)?;
            summary
                .class_ellipsoids()?
                .into_iter()
                .map(|e| {
                    CoreSetSpec::new(
                        UncertaintyRegion::Ellipsoid(e),
                        theta,
                        DistanceSpec::euclidean(),
                    )
                })
                .collect::<Result<Vec<_>>>()?
        }
        _ => vec![],
    };

    let sample_space = if !name.bounded_space() {
        UncertaintyRegion::FullSpace { dim: n }
    } else {
        let base = if name == ModelName::DroM2G1 {
            summary.gamma_bar1
        } else {
            summary.gamma_bar2
        };
        let mut gamma = base;
        // Widen the sample space just enough to hold every core set.
        let probe = summary.ellipsoid0(base)?;
        for c in &core_sets {
            if let UncertaintyRegion::Ellipsoid(e) = &c.region {
                let needed = probe.max_level_over(e)?;
                if needed > gamma {
                    gamma = needed * (1.0 + SPACE_MARGIN);
                }
            }
        }
        UncertaintyRegion::Ellipsoid(summary.ellipsoid0(gamma)?)
    };

    let problem = MgdroProblem {
        objective,
        feasible_set,
        sample_space,
        core_sets,
        ambiguity,
    };
    problem.validate_structure()?;
    Ok(problem)
}

#[derive(Clone, Debug, PartialEq)]
pub struct NamedModel {
    pub name: ModelName,
    pub params: ModelParams,
    pub problem: MgdroProblem,
}

/// Parameters used when none are tuned: `theta = 1`, radius `0.1` times the mean
/// nearest-neighbour distance.
pub fn default_params(name: ModelName, summary: &SampleSummary) -> ModelParams {
    ModelParams {
        theta: name.uses_theta().then_some(1.0),
        radius: name.uses_radius().then_some(0.1 * summary.nn_distance),
    }
}

/// The named models built on one training sample with default hyperparameters.
pub fn assemble_model_suite(
    samples: &DMatrix<f64>,
    config: &SuiteConfig,
    names: &[ModelName],
    seed: u64,
) -> Result<Vec<NamedModel>> {
    let summary = SampleSummary::from_samples(samples, config, seed)?;
    names
        .iter()
        .map(|&name| {
            let params = default_params(name, &summary);
            let problem = build_model(name, samples, &summary, config, &params)?;
            Ok(NamedModel {
                name,
                params,
                problem,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for m in ModelName::ALL {
            assert_eq!(m.as_str().parse::<ModelName>().unwrap(), m);
        }
        assert_eq!(ModelName::default_suite().len(), 11);
        assert!("MGDRO-X".parse::<ModelName>().is_err());
    }
}
