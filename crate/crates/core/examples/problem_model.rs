// Describes a two-mode problem, evaluates the penalty and round-trips it through JSON.

use nalgebra::{DMatrix, DVector};

use mgdro::conic::NormIndex;
use mgdro::model::{
    evaluate_penalty, AffinePiece, AmbiguitySpec, CoreSetSpec, DistanceSpec, Ellipsoid,
    LinearConstraints, MgdroProblem, PiecewiseLinearObjective, UncertaintyRegion,
};

pub fn two_mode_problem() -> mgdro::Result<MgdroProblem> {
    // h(x, xi) = max(xi_1 + xi_2 - x, 0.5 x - xi_1)
    let pieces = vec![
        AffinePiece {
            slope_matrix: DMatrix::zeros(2, 1),
            slope_offset: DVector::from_row_slice(&[1.0, 1.0]),
            intercept_coef: DVector::from_element(1, -1.0),
            intercept_offset: 0.0,
        },
        AffinePiece {
            slope_matrix: DMatrix::zeros(2, 1),
            slope_offset: DVector::from_row_slice(&[-1.0, 0.0]),
            intercept_coef: DVector::from_element(1, 0.5),
            intercept_offset: 0.0,
        },
    ];
    let left = Ellipsoid::new(
        DVector::from_row_slice(&[-1.0, 0.0]),
        DMatrix::identity(2, 2) * 0.2,
        1.0,
    )?;
    let right = Ellipsoid::new(
        DVector::from_row_slice(&[1.0, 0.5]),
        DMatrix::identity(2, 2) * 0.2,
        1.0,
    )?;
    let core = |e| {
        CoreSetSpec::new(
            UncertaintyRegion::Ellipsoid(e),
            2.0,
            DistanceSpec::euclidean(),
        )
    };
    let problem = MgdroProblem {
        objective: PiecewiseLinearObjective::plain(1, 2, pieces)?,
        feasible_set: LinearConstraints::nonnegative(1, &[0]),
        sample_space: UncertaintyRegion::Ellipsoid(Ellipsoid::new(
            DVector::zeros(2),
            DMatrix::identity(2, 2),
            6.0,
        )?),
        core_sets: vec![core(left)?, core(right)?],
        ambiguity: AmbiguitySpec::Moment {
            mu0: DVector::from_row_slice(&[0.0, 0.25]),
            sigma0: DMatrix::identity(2, 2) * 0.8,
            gamma1: 0.1,
            gamma2: 1.2,
        },
    };
    problem.validate()?;
    Ok(problem)
}

pub fn run_example() -> mgdro::Result<String> {
    let problem = two_mode_problem()?;
    for point in [[-1.0, 0.0], [0.0, 0.0], [2.0, 2.0]] {
        let xi = DVector::from_row_slice(&point);
        println!(
            "xi = {point:?}: h(1, xi) = {:.3}, penalty = {:.4}",
            problem
                .objective
                .evaluate(&DVector::from_element(1, 1.0), &xi)?,
            evaluate_penalty(&problem.core_sets, &xi)?
        );
    }
    let wasserstein = AmbiguitySpec::Wasserstein {
        samples: DMatrix::from_row_slice(2, 2, &[-1.0, 0.0, 1.0, 0.5]),
        radius: 0.2,
        norm: NormIndex::Two,
    };
    println!(
        "swapping in a Wasserstein ball keeps dimension {}",
        wasserstein.dim()
    );

    let json = problem.to_json()?;
    let back = MgdroProblem::from_json(&json)?;
    assert_eq!(back, problem);
    println!("JSON round trip ok ({} bytes)", json.len());
    Ok(json)
}

fn main() -> mgdro::Result<()> {
    run_example().map(|_| ())
}
