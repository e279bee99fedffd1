use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

use mgdro::conic::NormIndex;
use mgdro::conjugate::{support_value, PrimitiveSet};
use mgdro::datagen::ModelName;
use mgdro::harness::{read_trials_csv, write_trials_csv, ModelOutcome};
use mgdro::model::AmbiguitySpec;
use mgdro::model::{evaluate_penalty, CoreSetSpec, DistanceSpec, Ellipsoid, UncertaintyRegion};
use mgdro::newsvendor::{cvar_lp, empirical_cvar, loss_value, newsvendor_objective, PriceVector};
use mgdro::oracle::{grid_sup_moment, GridSpec};

fn norm_index() -> impl Strategy<Value = NormIndex> {
    prop_oneof![
        Just(NormIndex::One),
        Just(NormIndex::Two),
        Just(NormIndex::Inf)
    ]
}

fn core(center: Vec<f64>, radius_sq: f64, theta: f64, norm: NormIndex, power: u8) -> CoreSetSpec {
    let d = center.len();
    let e = Ellipsoid::new(
        DVector::from_vec(center),
        DMatrix::identity(d, d),
        radius_sq,
    )
    .unwrap();
    CoreSetSpec::new(
        UncertaintyRegion::Ellipsoid(e),
        theta,
        DistanceSpec::new(norm, power).unwrap(),
    )
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn cvar_sort_matches_lp(losses in prop::collection::vec(-100.0f64..100.0, 1..60), eps in 0.01f64..1.0) {
        let a = empirical_cvar(&losses, eps).unwrap();
        let b = cvar_lp(&losses, eps).unwrap();
        prop_assert!((a - b).abs() <= 1e-6 * (1.0 + a.abs()), "{a} vs {b}");
        let max = losses.iter().cloned().fold(f64::MIN, f64::max);
        let mean = losses.iter().sum::<f64>() / losses.len() as f64;
        prop_assert!(a <= max + 1e-9 && a >= mean - 1e-9);
    }

    #[test]
    fn newsvendor_pieces_reproduce_loss(
        x in prop::collection::vec(0.0f64..50.0, 3),
        xi in prop::collection::vec(0.0f64..60.0, 3),
        beta in -200.0f64..50.0,
    ) {
        let prices = PriceVector::benchmark(3);
        let eps = 0.1;
        let obj = newsvendor_objective(&prices, 3, eps).unwrap();
        let mut dec = x.clone();
        dec.push(beta);
        let h = obj.evaluate(&DVector::from_vec(dec), &DVector::from_vec(xi.clone())).unwrap();
        let loss = loss_value(&prices, &DVector::from_vec(x), &DVector::from_vec(xi)).unwrap();
        let expect = (loss - beta).max(0.0);
        prop_assert_eq!(obj.outer_scale, 1.0 / eps);
        prop_assert!((h - expect).abs() <= 1e-8 * (1.0 + expect.abs()), "{h} vs {expect}");
    }

    #[test]
    fn penalty_is_nonnegative_and_vanishes_on_cores(
        c1 in prop::collection::vec(-3.0f64..3.0, 2),
        c2 in prop::collection::vec(-3.0f64..3.0, 2),
        r in 0.1f64..1.0,
        theta in 0.1f64..5.0,
        norm in norm_index(),
        power in 1u8..=2,
        xi in prop::collection::vec(-5.0f64..5.0, 2),
        t in 0.0f64..1.0,
    ) {
        let cores = vec![core(c1.clone(), r * r, theta, norm, power), core(c2, r * r, 2.0 * theta, norm, power)];
        prop_assert!(evaluate_penalty(&cores, &DVector::from_vec(xi)).unwrap() >= 0.0);
        let inside = DVector::from_row_slice(&[c1[0] + t * r * 0.7, c1[1]]);
        prop_assert!(evaluate_penalty(&cores, &inside).unwrap().abs() <= 1e-9);
    }

    #[test]
    fn support_is_positively_homogeneous(
        u in prop::collection::vec(-5.0f64..5.0, 3),
        alpha in 0.0f64..10.0,
        norm in norm_index(),
        radius_sq in 0.1f64..4.0,
    ) {
        let set = PrimitiveSet::Ball { norm, radius_sq, dim: 3 };
        let u = DVector::from_vec(u);
        let a = support_value(&set, &(&u * alpha)).unwrap().finite().unwrap();
        let b = support_value(&set, &u).unwrap().finite().unwrap();
        prop_assert!((a - alpha * b).abs() <= 1e-9 * (1.0 + a.abs()));
        prop_assert!(b >= -1e-12);
    }

    #[test]
    fn trials_csv_round_trips(rows in prop::collection::vec(
        (0usize..50, any::<u64>(), prop::option::of(0.01f64..100.0), prop::option::of(-500.0f64..500.0)), 0..20)
    ) {
        let outcomes: Vec<ModelOutcome> = rows.iter().map(|&(trial, seed, theta, cvar)| ModelOutcome {
            trial,
            seed,
            model: if trial % 2 == 0 { ModelName::MgdroM1 } else { ModelName::DroW2 },
            theta,
            radius: None,
            cvar,
            error: if cvar.is_none() { Some("solver failed".into()) } else { None },
            seconds: 0.0,
        }).collect();
        let mut buf = Vec::new();
        write_trials_csv(&mut buf, &outcomes).unwrap();
        let back = read_trials_csv(buf.as_slice()).unwrap();
        prop_assert_eq!(back, outcomes);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn nested_grid_sup_grows(a in -1.0f64..1.0, b in -1.0f64..1.0, c in 0.1f64..1.0, gamma1 in 0.05f64..0.5) {
        // A 2k-1 grid contains the k grid, so its supremum cannot shrink.
        let space = UncertaintyRegion::Ellipsoid(Ellipsoid::new(DVector::zeros(2), DMatrix::identity(2, 2), 4.0).unwrap());
        let amb = AmbiguitySpec::Moment {
            mu0: DVector::zeros(2),
            sigma0: DMatrix::identity(2, 2) * 0.5,
            gamma1,
            gamma2: 1.5,
        };
        let f = |p: &DVector<f64>| (a * p[0] + b * p[1]).max(c * p[0] * p[0] - 1.0);
        let mut prev = f64::NEG_INFINITY;
        for k in [5usize, 9, 17] {
            let pts = GridSpec::cube(2, -2.0, 2.0, k).unwrap().points(&space).unwrap();
            let vals: Vec<f64> = pts.iter().map(f).collect();
            let v = grid_sup_moment(&vals, &pts, &amb).unwrap();
            prop_assert!(v >= prev - 1e-6 * (1.0 + v.abs()), "{k}: {v} < {prev}");
            prev = v;
        }
    }
}
