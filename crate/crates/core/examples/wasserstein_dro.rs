// Wasserstein DRO with and without core sets, sweeping the radius.

use nalgebra::{DMatrix, DVector};

use mgdro::conic::{solve, NormIndex, SolverSettings};
use mgdro::model::{
    AffinePiece, AmbiguitySpec, CoreSetSpec, DistanceSpec, Ellipsoid, LinearConstraints,
    MgdroProblem, PiecewiseLinearObjective, UncertaintyRegion,
};
use mgdro::wasserstein::{
    build_dro_wasserstein, build_mgdro_wasserstein, extract_wasserstein_certificate,
};

fn problem(radius: f64, with_cores: bool) -> mgdro::Result<MgdroProblem> {
    // h(x, xi) = max(xi - x, 0.3 (x - xi)) on the line
    let piece = |s: f64, c: f64| {
        AffinePiece::with_constant_slope(
            DVector::from_element(1, s),
            DVector::from_element(1, c),
            0.0,
        )
    };
    let samples = DMatrix::from_column_slice(6, 1, &[-2.1, -1.9, -2.0, 1.8, 2.2, 2.0]);
    let core = |c: f64| {
        CoreSetSpec::new(
            UncertaintyRegion::Ellipsoid(Ellipsoid::new(
                DVector::from_element(1, c),
                DMatrix::identity(1, 1),
                0.09,
            )?),
            3.0,
            DistanceSpec::euclidean(),
        )
    };
    Ok(MgdroProblem {
        objective: PiecewiseLinearObjective::plain(1, 1, vec![piece(1.0, -1.0), piece(-0.3, 0.3)])?,
        feasible_set: LinearConstraints::unconstrained(1),
        sample_space: UncertaintyRegion::FullSpace { dim: 1 },
        core_sets: if with_cores {
            vec![core(-2.0)?, core(2.0)?]
        } else {
            vec![]
        },
        ambiguity: AmbiguitySpec::Wasserstein {
            samples,
            radius,
            norm: NormIndex::Two,
        },
    })
}

/// `(radius, DRO value, MGDRO value)` for each radius.
pub fn run_example() -> mgdro::Result<Vec<(f64, f64, f64)>> {
    let settings = SolverSettings::default();
    let mut rows = Vec::new();
    for radius in [0.0, 0.1, 0.5, 1.0] {
        let p = problem(radius, false)?;
        let prog = build_dro_wasserstein(&p)?;
        let (x_dro, dro) = extract_wasserstein_certificate(&prog, &solve(&prog, &settings))?;
        let p = problem(radius, true)?;
        let prog = build_mgdro_wasserstein(&p)?;
        let (x_mg, mg) = extract_wasserstein_certificate(&prog, &solve(&prog, &settings))?;
        println!(
            "r = {radius:4.2}: DRO {:8.5} (x {:7.4}, lambda {:.3})   MGDRO {:8.5} (x {:7.4}, lambda {:.3})",
            dro.objective, x_dro[0], dro.lambda, mg.objective, x_mg[0], mg.lambda
        );
        rows.push((radius, dro.objective, mg.objective));
    }
    Ok(rows)
}

fn main() -> mgdro::Result<()> {
    run_example().map(|_| ())
}
