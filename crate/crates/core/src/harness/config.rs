use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::conic::NormIndex;
use crate::datagen::{BootstrapSettings, MixtureSpec, ModelName, SuiteConfig};
use crate::error::{Error, Result};
use crate::newsvendor::PriceVector;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Modality {
    Bimodal,
    Trimodal,
}

impl Modality {
    pub fn mixture(&self) -> MixtureSpec {
        match self {
            Modality::Bimodal => MixtureSpec::bimodal(),
            Modality::Trimodal => MixtureSpec::trimodal(),
        }
    }
}

/// Everything needed to reproduce an experiment. Missing JSON fields take the defaults.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub modality: Modality,
    /// Overrides the mixture implied by `modality`.
    pub mixture: Option<MixtureSpec>,
    pub prices: PriceVector,
    pub epsilon: f64,
    pub n_train: usize,
    pub n_test: usize,
    pub trials: usize,
    pub theta_grid: Vec<f64>,
    /// Radii are these factors times the mean nearest-neighbour distance of the training sample.
    pub radius_factors: Vec<f64>,
    pub folds: usize,
    pub seed: u64,
    pub models: Vec<ModelName>,
    pub core_coverage: f64,
    pub wasserstein_norm: NormIndex,
    pub bootstrap: BootstrapSettings,
    /// Tune MGDRO-W over the full theta x radius grid instead of fixing the radius from DRO-W first.
    pub joint_wasserstein_tuning: bool,
    pub summary_csv: String,
    pub trials_csv: String,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            modality: Modality::Bimodal,
            mixture: None,
            prices: PriceVector::benchmark(3),
            epsilon: 0.05,
            n_train: 100,
            n_test: 100_000,
            trials: 100,
            theta_grid: vec![0.1, 0.5, 1.0, 2.0, 5.0, 10.0, 50.0],
            radius_factors: vec![0.01, 0.05, 0.1, 0.5, 1.0, 2.0],
            folds: 5,
            seed: 2024,
            models: ModelName::default_suite(),
            core_coverage: 0.5,
            wasserstein_norm: NormIndex::Two,
            bootstrap: BootstrapSettings::default(),
            joint_wasserstein_tuning: false,
            summary_csv: "summary.csv".into(),
            trials_csv: "trials.csv".into(),
        }
    }
}

impl ExperimentConfig {
    pub fn trimodal() -> Self {
        Self {
            modality: Modality::Trimodal,
            ..Self::default()
        }
    }

    pub fn mixture_spec(&self) -> MixtureSpec {
        self.mixture
            .clone()
            .unwrap_or_else(|| self.modality.mixture())
    }

    pub fn suite_config(&self) -> SuiteConfig {
        SuiteConfig {
            prices: self.prices.clone(),
            epsilon: self.epsilon,
            modes: self.mixture_spec().num_components(),
            core_coverage: self.core_coverage,
            wasserstein_norm: self.wasserstein_norm,
            bootstrap: self.bootstrap,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mix = self.mixture_spec();
        mix.validate()?;
        self.prices.validate()?;
        if mix.dim() != self.prices.len() {
            return Err(Error::Dimension(
                "mixture dimension must match the number of prices".into(),
            ));
        }
        if self.folds < 2 {
            return Err(Error::Invalid("folds must be >= 2".into()));
        }
        if self.n_train < self.folds || self.n_train < 2 {
            return Err(Error::Invalid(
                "n_train must be at least the fold count".into(),
            ));
        }
        if self.n_test == 0 || self.trials == 0 {
            return Err(Error::Invalid("n_test and trials must be >= 1".into()));
        }
        if self.theta_grid.is_empty() || self.theta_grid.iter().any(|t| !(*t > 0.0)) {
            return Err(Error::Invalid(
                "theta grid must be nonempty and strictly positive".into(),
            ));
        }
        if self.radius_factors.is_empty() || self.radius_factors.iter().any(|r| !(*r >= 0.0)) {
            return Err(Error::Invalid(
                "radius grid must be nonempty and nonnegative".into(),
            ));
        }
        if self.models.is_empty() {
            return Err(Error::Invalid("model list is empty".into()));
        }
        if !(self.epsilon > 0.0 && self.epsilon <= 1.0) {
            return Err(Error::Invalid("epsilon must lie in (0, 1]".into()));
        }
        Ok(())
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let c: Self = serde_json::from_str(s)?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// SplitMix64 step, used to derive independent sub-seeds.
pub fn derive_seed(base: u64, stream: u64) -> u64 {
    let mut z = base.wrapping_add(stream.wrapping_add(1).wrapping_mul(0x9e37_79b9_7f4a_7c15));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of trial `index`: the master seed xor the index.
pub fn trial_seed(master: u64, index: usize) -> u64 {
    master ^ index as u64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_defaults_and_validation() {
        let c = ExperimentConfig::from_json(r#"{"trials": 3, "modality": "trimodal"}"#).unwrap();
        assert_eq!(c.trials, 3);
        assert_eq!(c.suite_config().modes, 3);
        assert_eq!(c.folds, 5);
        assert!(ExperimentConfig::from_json(r#"{"folds": 1}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"theta_grid": [0.0]}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"bogus": 1}"#).is_err());
        let round = ExperimentConfig::from_json(&c.to_json().unwrap()).unwrap();
        assert_eq!(round, c);
    }
}
