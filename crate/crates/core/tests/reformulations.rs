use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use mgdro::conic::{solve, Cone, NormIndex, SolverSettings};
use mgdro::model::{
    AffinePiece, AmbiguitySpec, CoreSetSpec, DistanceSpec, Ellipsoid, LinearConstraints,
    MgdroProblem, PiecewiseLinearObjective, UncertaintyRegion,
};
use mgdro::newsvendor::{newsvendor_feasible_set, newsvendor_objective, solve_sp, PriceVector};
use mgdro::verify::{self, Family};
use mgdro::wasserstein::{
    build_dro_wasserstein, build_mgdro_wasserstein, extract_wasserstein_certificate,
};

fn nine_piece_problem(space: UncertaintyRegion, cores: Vec<CoreSetSpec>) -> MgdroProblem {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let pieces = (0..9)
        .map(|_| {
            AffinePiece::with_constant_slope(
                DVector::from_fn(2, |_, _| rng.random_range(-1.0..1.0)),
                DVector::from_fn(1, |_, _| rng.random_range(-1.0..1.0)),
                rng.random_range(-1.0..1.0),
            )
        })
        .collect();
    MgdroProblem {
        objective: PiecewiseLinearObjective::plain(1, 2, pieces).unwrap(),
        feasible_set: LinearConstraints::unconstrained(1),
        sample_space: space,
        core_sets: cores,
        ambiguity: AmbiguitySpec::Wasserstein {
            samples: DMatrix::from_fn(10, 2, |_, _| rng.random_range(-0.5..0.5)),
            radius: 0.2,
            norm: NormIndex::Two,
        },
    }
}

fn soc(c: &Cone) -> bool {
    matches!(c, Cone::SecondOrder(_))
}

#[test]
fn wasserstein_full_space_row_counts() {
    let prog = build_dro_wasserstein(&nine_piece_problem(
        UncertaintyRegion::FullSpace { dim: 2 },
        vec![],
    ))
    .unwrap();
    assert_eq!(prog.count_rows(Some("main"), |c| *c == Cone::Nonneg), 90);
    assert_eq!(prog.count_blocks(Some("lambda_cap"), soc), 9);
}

#[test]
fn mgdro_wasserstein_row_counts() {
    let ball = |c: [f64; 2], r2: f64| {
        Ellipsoid::new(DVector::from_row_slice(&c), DMatrix::identity(2, 2), r2).unwrap()
    };
    let core = |c| {
        CoreSetSpec::new(
            UncertaintyRegion::Ellipsoid(ball(c, 0.1)),
            2.0,
            DistanceSpec::euclidean(),
        )
        .unwrap()
    };
    let p = nine_piece_problem(
        UncertaintyRegion::Ellipsoid(ball([0.0, 0.0], 4.0)),
        vec![core([-0.3, 0.0]), core([0.3, 0.0])],
    );
    p.validate().unwrap();
    let prog = build_mgdro_wasserstein(&p).unwrap();
    assert_eq!(prog.count_rows(Some("main"), |c| *c == Cone::Nonneg), 180);
    assert_eq!(prog.count_blocks(Some("lambda_cap"), soc), 180);
    assert_eq!(prog.count_blocks(Some("support_core"), soc), 180);
    assert_eq!(prog.count_blocks(Some("support_sample"), soc), 180);
    assert_eq!(prog.count_blocks(Some("distance_conjugate"), soc), 180);

    let sol = solve(&prog, &SolverSettings::default());
    let (_, mg) = extract_wasserstein_certificate(&prog, &sol).unwrap();
    let plain = MgdroProblem {
        core_sets: vec![],
        ..p
    };
    let prog = build_dro_wasserstein(&plain).unwrap();
    let (_, dro) =
        extract_wasserstein_certificate(&prog, &solve(&prog, &SolverSettings::default())).unwrap();
    assert!(mg.objective <= dro.objective + 1e-6 * (1.0 + dro.objective.abs()));
}

#[test]
fn zero_radius_newsvendor_matches_sample_average() {
    let prices = PriceVector::benchmark(3);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let samples = DMatrix::from_fn(15, 3, |_, _| rng.random_range(10.0..60.0));
    let problem = MgdroProblem {
        objective: newsvendor_objective(&prices, 3, 0.1).unwrap(),
        feasible_set: newsvendor_feasible_set(3),
        sample_space: UncertaintyRegion::FullSpace { dim: 3 },
        core_sets: vec![],
        ambiguity: AmbiguitySpec::Wasserstein {
            samples: samples.clone(),
            radius: 0.0,
            norm: NormIndex::Two,
        },
    };
    let prog = build_dro_wasserstein(&problem).unwrap();
    let (_, cert) =
        extract_wasserstein_certificate(&prog, &solve(&prog, &SolverSettings::tight())).unwrap();
    let sp = solve_sp(&samples, &prices, 0.1).unwrap();
    assert!(
        (cert.objective - sp.objective).abs() <= 1e-6 * (1.0 + sp.objective.abs()),
        "{} vs {}",
        cert.objective,
        sp.objective
    );
}

#[test]
fn small_oracle_runs() {
    for family in [Family::Moment, Family::Wasserstein] {
        let c = verify::check_oracle_equivalence(family, 2, 10_000, 3);
        assert!(c.passed, "{c}");
    }
}

#[test]
fn structural_checks_on_few_instances() {
    for c in [
        verify::check_sp_equivalence(4),
        verify::check_certificates(2, 2_500, 4),
        verify::check_core_equals_space(2, 4),
        verify::check_theta_monotone(2, 4),
        verify::check_sandwich(3, 4),
        verify::check_conjugates(20, 4),
        verify::check_newsvendor(500, 4),
    ] {
        assert!(c.passed, "{c}");
    }
}
