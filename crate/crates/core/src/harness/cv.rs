use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::config::derive_seed;
use super::solve::solve_model;
use crate::conic::SolverSettings;
use crate::datagen::{build_model, ModelName, ModelParams, NamedModel, SampleSummary, SuiteConfig};
use crate::error::{Error, Result};
use crate::newsvendor::out_of_sample_cvar;

/// One training/validation split with the summary of its training part.
#[derive(Clone, Debug)]
pub struct Fold {
    pub train: DMatrix<f64>,
    pub validation: DMatrix<f64>,
    pub summary: SampleSummary,
}

fn select_rows(samples: &DMatrix<f64>, rows: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), samples.ncols(), |i, j| samples[(rows[i], j)])
}

/// Deterministic k-fold split; the summary of each fold sees only its training rows.
pub fn make_folds(
    samples: &DMatrix<f64>,
    folds: usize,
    config: &SuiteConfig,
    seed: u64,
) -> Result<Vec<Fold>> {
    let n = samples.nrows();
    if folds < 2 || n < folds {
        return Err(Error::Invalid(format!(
            "cannot split {n} samples into {folds} folds"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    (0..folds)
        .map(|f| {
            let (lo, hi) = (f * n / folds, (f + 1) * n / folds);
            let val: Vec<usize> = order[lo..hi].to_vec();
            let train: Vec<usize> = order[..lo].iter().chain(&order[hi..]).copied().collect();
            let train = select_rows(samples, &train);
            let summary = SampleSummary::from_samples(&train, config, derive_seed(seed, f as u64))?;
            log::debug!(
                "fold {f}: {} training rows, {} validation rows",
                train.nrows(),
                val.len()
            );
            Ok(Fold {
                train,
                validation: select_rows(samples, &val),
                summary,
            })
        })
        .collect()
}

/// Validation score of every candidate together with the chosen one.
#[derive(Clone, Debug, PartialEq)]
pub struct CvOutcome {
    pub best: ModelParams,
    pub best_score: f64,
    /// `(params, mean validation CVaR)`; failed candidates carry `None`.
    pub scores: Vec<(ModelParams, Option<f64>)>,
}

/// Mean validation CVaR of one parameter choice over all folds.
pub fn fold_score(
    name: ModelName,
    params: &ModelParams,
    folds: &[Fold],
    config: &SuiteConfig,
    settings: &SolverSettings,
) -> Result<f64> {
    let mut total = 0.0;
    for fold in folds {
        let problem = build_model(name, &fold.train, &fold.summary, config, params)?;
        let model = NamedModel {
            name,
            params: *params,
            problem,
        };
        let x = solve_model(
            &model,
            &fold.train,
            &config.prices,
            config.epsilon,
            settings,
        )?;
        total += out_of_sample_cvar(&config.prices, &x, &fold.validation, config.epsilon)?;
    }
    Ok(total / folds.len() as f64)
}

/// Picks the candidate with the lowest mean validation CVaR.
///
/// Candidates are tried in the given order and a later one must be strictly better to win,
/// so listing them in increasing size breaks ties toward the smaller parameter.
/// Candidates whose build or solve fails are skipped.
pub fn cross_validate(
    name: ModelName,
    candidates: &[ModelParams],
    folds: &[Fold],
    config: &SuiteConfig,
    settings: &SolverSettings,
) -> Result<CvOutcome> {
    let mut scores = Vec::with_capacity(candidates.len());
    let mut best: Option<(ModelParams, f64)> = None;
    for p in candidates {
        match fold_score(name, p, folds, config, settings) {
            Ok(s) => {
                log::debug!("{name} {p:?}: validation CVaR {s}");
                if best.is_none_or(|(_, b)| s < b - 1e-9 * (1.0 + b.abs())) {
                    best = Some((*p, s));
                }
                scores.push((*p, Some(s)));
            }
            Err(e) => {
                log::warn!("{name} {p:?}: skipped during cross-validation ({e})");
                scores.push((*p, None));
            }
        }
    }
    let (best, best_score) = best.ok_or_else(|| {
        Error::Invalid(format!("every cross-validation candidate of {name} failed"))
    })?;
    Ok(CvOutcome {
        best,
        best_score,
        scores,
    })
}

/// Candidate lists sorted ascending.
pub fn theta_candidates(grid: &[f64], radius: Option<f64>) -> Vec<ModelParams> {
    let mut g = grid.to_vec();
    g.sort_by(f64::total_cmp);
    g.into_iter()
        .map(|t| ModelParams {
            theta: Some(t),
            radius,
        })
        .collect()
}

pub fn radius_candidates(radii: &[f64], theta: Option<f64>) -> Vec<ModelParams> {
    let mut g = radii.to_vec();
    g.sort_by(f64::total_cmp);
    g.into_iter()
        .map(|r| ModelParams {
            theta,
            radius: Some(r),
        })
        .collect()
}

/// Full grid, ordered by theta then radius.
pub fn joint_candidates(thetas: &[f64], radii: &[f64]) -> Vec<ModelParams> {
    let mut out = Vec::new();
    for p in theta_candidates(thetas, None) {
        for r in radius_candidates(radii, p.theta) {
            out.push(r);
        }
    }
    out
}
