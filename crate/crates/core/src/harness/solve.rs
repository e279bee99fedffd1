use nalgebra::{DMatrix, DVector};

use crate::conic::{solve, SolverSettings};
use crate::datagen::{ModelFamily, ModelName, NamedModel};
use crate::error::Result;
use crate::moment::{build_dro_moment, build_mgdro_moment, extract_moment_certificate};
use crate::newsvendor::{solve_sp, PriceVector};
use crate::wasserstein::{
    build_dro_wasserstein, build_mgdro_wasserstein, extract_wasserstein_certificate,
};

/// Solves one suite model and returns the order quantities (without the CVaR threshold).
pub fn solve_model(
    model: &NamedModel,
    samples: &DMatrix<f64>,
    prices: &PriceVector,
    epsilon: f64,
    settings: &SolverSettings,
) -> Result<DVector<f64>> {
    let n = prices.len();
    let problem = &model.problem;
    let x = match model.name.family() {
        ModelFamily::SampleAverage => return Ok(solve_sp(samples, prices, epsilon)?.order),
        ModelFamily::Moment => {
            let prog = if model.name == ModelName::DroM1
                || model.name == ModelName::DroM2G1
                || model.name == ModelName::DroM2G2
            {
                build_dro_moment(problem)?
            } else {
                build_mgdro_moment(problem)?
            };
            let sol = solve(&prog, settings);
            extract_moment_certificate(&prog, &sol)?.0
        }
        ModelFamily::Wasserstein => {
            let prog = if problem.core_sets.is_empty() {
                build_dro_wasserstein(problem)?
            } else {
                build_mgdro_wasserstein(problem)?
            };
            let sol = solve(&prog, settings);
            extract_wasserstein_certificate(&prog, &sol)?.0
        }
    };
    // Interior-point noise can leave tiny negative orders.
    Ok(DVector::from_fn(n, |i, _| x[i].max(0.0)))
}
