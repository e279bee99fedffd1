use std::collections::BTreeMap;
use std::time::Instant;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{derive_seed, trial_seed, ExperimentConfig};
use super::cv::{
    cross_validate, joint_candidates, make_folds, radius_candidates, theta_candidates, Fold,
};
use super::solve::solve_model;
use crate::conic::SolverSettings;
use crate::datagen::{
    build_model, sample_mixture, ModelName, ModelParams, NamedModel, SampleSummary,
};
use crate::error::{Error, Result};
use crate::newsvendor::out_of_sample_cvar;

const STREAM_TRAIN: u64 = 1;
const STREAM_TEST: u64 = 2;
const STREAM_SUMMARY: u64 = 3;
const STREAM_FOLDS: u64 = 4;

/// Training and evaluation samples of one trial.
#[derive(Clone, Debug)]
pub struct TrialData {
    pub index: usize,
    pub seed: u64,
    pub train: DMatrix<f64>,
    pub test: DMatrix<f64>,
}

pub fn trial_data(config: &ExperimentConfig, index: usize) -> Result<TrialData> {
    let seed = trial_seed(config.seed, index);
    let mix = config.mixture_spec();
    Ok(TrialData {
        index,
        seed,
        train: sample_mixture(&mix, config.n_train, derive_seed(seed, STREAM_TRAIN))?,
        test: sample_mixture(&mix, config.n_test, derive_seed(seed, STREAM_TEST))?,
    })
}

/// Result of one model in one trial.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelOutcome {
    pub trial: usize,
    pub seed: u64,
    pub model: ModelName,
    pub theta: Option<f64>,
    pub radius: Option<f64>,
    /// Out-of-sample CVaR on the evaluation sample; `None` when the model failed.
    pub cvar: Option<f64>,
    pub error: Option<String>,
    #[serde(skip)]
    pub seconds: f64,
}

/// Hyperparameters chosen by cross-validation on the training sample of one trial.
#[derive(Clone, Debug)]
pub struct Tuner<'a> {
    config: &'a ExperimentConfig,
    train: &'a DMatrix<f64>,
    folds: Vec<Fold>,
    radii: Vec<f64>,
    settings: SolverSettings,
    cache: BTreeMap<ModelName, ModelParams>,
}

impl<'a> Tuner<'a> {
    pub fn new(config: &'a ExperimentConfig, train: &'a DMatrix<f64>, seed: u64) -> Result<Self> {
        let suite = config.suite_config();
        let folds = make_folds(train, config.folds, &suite, derive_seed(seed, STREAM_FOLDS))?;
        let nn = crate::datagen::mean_nearest_neighbor_distance(train)?;
        let radii = config.radius_factors.iter().map(|f| f * nn).collect();
        Ok(Self {
            config,
            train,
            folds,
            radii,
            settings: SolverSettings::default(),
            cache: BTreeMap::new(),
        })
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    /// Tuned parameters of `name`; DRO-W radii are reused by MGDRO-W unless joint tuning is on.
    pub fn params(&mut self, name: ModelName) -> Result<ModelParams> {
        if let Some(p) = self.cache.get(&name) {
            return Ok(*p);
        }
        let suite = self.config.suite_config();
        let candidates = match name {
            ModelName::MgdroW1 | ModelName::MgdroW2 if !self.config.joint_wasserstein_tuning => {
                let base = if name == ModelName::MgdroW1 {
                    ModelName::DroW1
                } else {
                    ModelName::DroW2
                };
                let r = self.params(base)?.radius;
                theta_candidates(&self.config.theta_grid, r)
            }
            _ if name.uses_theta() && name.uses_radius() => {
                joint_candidates(&self.config.theta_grid, &self.radii)
            }
            _ if name.uses_theta() => theta_candidates(&self.config.theta_grid, None),
            _ if name.uses_radius() => radius_candidates(&self.radii, None),
            _ => vec![ModelParams::default()],
        };
        let best = if candidates.len() == 1 {
            candidates[0]
        } else {
            log::info!(
                "tuning {name} over {} candidates on {} training rows in {} folds",
                candidates.len(),
                self.train.nrows(),
                self.folds.len()
            );
            cross_validate(name, &candidates, &self.folds, &suite, &self.settings)?.best
        };
        self.cache.insert(name, best);
        Ok(best)
    }
}

/// Tunes, fits and evaluates every configured model on one trial.
pub fn run_trial(config: &ExperimentConfig, index: usize) -> Result<Vec<ModelOutcome>> {
    let data = trial_data(config, index)?;
    let suite = config.suite_config();
    let summary =
        SampleSummary::from_samples(&data.train, &suite, derive_seed(data.seed, STREAM_SUMMARY))?;
    let mut tuner = Tuner::new(config, &data.train, data.seed)?;
    let settings = SolverSettings::default();
    let mut out = Vec::with_capacity(config.models.len());
    for &name in &config.models {
        let start = Instant::now();
        let mut params = ModelParams::default();
        let result = tuner.params(name).and_then(|p| {
            params = p;
            let problem = build_model(name, &data.train, &summary, &suite, &p)?;
            let model = NamedModel {
                name,
                params: p,
                problem,
            };
            let x = solve_model(&model, &data.train, &suite.prices, suite.epsilon, &settings)?;
            // The evaluation sample is touched only here, after tuning and fitting.
            out_of_sample_cvar(&suite.prices, &x, &data.test, suite.epsilon)
        });
        let seconds = start.elapsed().as_secs_f64();
        if let Err(e) = &result {
            log::warn!("trial {index}: {name} failed: {e}");
        }
        out.push(ModelOutcome {
            trial: index,
            seed: data.seed,
            model: name,
            theta: params.theta,
            radius: params.radius,
            error: result.as_ref().err().map(|e| e.to_string()),
            cvar: result.ok(),
            seconds,
        });
    }
    log::info!("trial {index} finished");
    Ok(out)
}

/// Runs every trial, in parallel over `jobs` threads (0 means all cores), in trial order.
pub fn run_experiment(config: &ExperimentConfig, jobs: usize) -> Result<Vec<ModelOutcome>> {
    config.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::Invalid(format!("thread pool: {e}")))?;
    let per_trial: Vec<Result<Vec<ModelOutcome>>> = pool.install(|| {
        (0..config.trials)
            .into_par_iter()
            .map(|t| run_trial(config, t))
            .collect()
    });
    let mut out = Vec::new();
    for r in per_trial {
        out.extend(r?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_trial_is_reproducible() {
        let config = ExperimentConfig {
            n_train: 30,
            n_test: 2000,
            trials: 1,
            folds: 3,
            theta_grid: vec![1.0, 10.0],
            radius_factors: vec![0.1],
            models: vec![ModelName::Sp, ModelName::DroM1, ModelName::MgdroM1],
            ..ExperimentConfig::default()
        };
        let a = run_trial(&config, 0).unwrap();
        let b = run_trial(&config, 0).unwrap();
        assert_eq!(a.len(), 3);
        for (x, y) in a.iter().zip(&b) {
            assert!(x.cvar.is_some(), "{:?}", x.error);
            assert_eq!(x.cvar, y.cvar);
            assert_eq!(x.theta, y.theta);
        }
        assert!(a[2].theta.is_some());
    }
}
