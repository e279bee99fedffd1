use std::collections::HashSet;

use mgdro::conic::SolverSettings;
use mgdro::datagen::{build_model, ModelName, ModelParams, NamedModel, SampleSummary};
use mgdro::harness::{
    derive_seed, make_folds, read_trials_csv, run_experiment, summarize, trial_data,
    write_summary_csv, write_trials_csv, ExperimentConfig, Modality, Tuner,
};
use mgdro::newsvendor::out_of_sample_cvar;

fn small() -> ExperimentConfig {
    ExperimentConfig {
        trials: 3,
        n_train: 30,
        n_test: 2_000,
        folds: 3,
        theta_grid: vec![1.0, 50.0],
        radius_factors: vec![0.1, 1.0],
        models: vec![
            ModelName::Sp,
            ModelName::DroM1,
            ModelName::MgdroM1,
            ModelName::DroW1,
        ],
        ..ExperimentConfig::default()
    }
}

#[test]
fn config_json_round_trip_and_rejects_unknown_fields() {
    let mut c = ExperimentConfig::trimodal();
    c.seed = 99;
    let back = ExperimentConfig::from_json(&c.to_json().unwrap()).unwrap();
    assert_eq!(back.modality, Modality::Trimodal);
    assert_eq!(back.seed, 99);
    assert!(ExperimentConfig::from_json(r#"{"trails": 3}"#).is_err());
    let partial = ExperimentConfig::from_json(r#"{"trials": 7}"#).unwrap();
    assert_eq!(partial.trials, 7);
    assert_eq!(partial.n_train, 100);
}

#[test]
fn trial_streams_are_distinct() {
    let c = small();
    let a = trial_data(&c, 0).unwrap();
    let b = trial_data(&c, 1).unwrap();
    assert_ne!(a.seed, b.seed);
    assert_ne!(a.train, b.train);
    assert_ne!(a.train.row(0), a.test.row(0));
    assert_eq!(trial_data(&c, 1).unwrap().test, b.test);
    let seeds: HashSet<u64> = (0..64).map(|s| derive_seed(7, s)).collect();
    assert_eq!(seeds.len(), 64);
}

#[test]
fn folds_only_use_training_rows() {
    let c = small();
    let data = trial_data(&c, 0).unwrap();
    let folds = make_folds(&data.train, 3, &c.suite_config(), 1).unwrap();
    let train_rows: HashSet<Vec<u64>> = data
        .train
        .row_iter()
        .map(|r| r.iter().map(|v| v.to_bits()).collect::<Vec<_>>())
        .collect();
    let mut validation = 0;
    for f in &folds {
        validation += f.validation.nrows();
        assert_eq!(f.train.nrows() + f.validation.nrows(), data.train.nrows());
        for r in f.train.row_iter().chain(f.validation.row_iter()) {
            assert!(train_rows.contains(&r.iter().map(|v| v.to_bits()).collect::<Vec<_>>()));
        }
    }
    assert_eq!(validation, data.train.nrows());
}

#[test]
fn sp_matches_zero_radius_wasserstein_on_trial_data() {
    let c = small();
    let data = trial_data(&c, 2).unwrap();
    let suite = c.suite_config();
    let summary = SampleSummary::from_samples(&data.train, &suite, 3).unwrap();
    let settings = SolverSettings::tight();
    let fit = |name, params: ModelParams| {
        let problem = build_model(name, &data.train, &summary, &suite, &params).unwrap();
        let model = NamedModel {
            name,
            params,
            problem,
        };
        let x = mgdro::harness::solve_model(&model, &data.train, &c.prices, c.epsilon, &settings)
            .unwrap();
        out_of_sample_cvar(&c.prices, &x, &data.train, c.epsilon).unwrap()
    };
    let sp = fit(
        ModelName::Sp,
        ModelParams {
            theta: None,
            radius: None,
        },
    );
    let w0 = fit(
        ModelName::DroW1,
        ModelParams {
            theta: None,
            radius: Some(0.0),
        },
    );
    assert!((sp - w0).abs() <= 1e-5 * (1.0 + sp.abs()), "{sp} vs {w0}");
}

#[test]
fn tuner_picks_from_the_grid() {
    let c = small();
    let data = trial_data(&c, 0).unwrap();
    let mut tuner = Tuner::new(&c, &data.train, data.seed).unwrap();
    let p = tuner.params(ModelName::MgdroM1).unwrap();
    assert!(c.theta_grid.contains(&p.theta.unwrap()));
    let r = tuner.params(ModelName::DroW1).unwrap().radius.unwrap();
    assert!(tuner.radii().contains(&r));
}

#[test]
fn small_experiment_is_deterministic_and_aggregates_exactly() {
    let c = small();
    let run = || {
        let outcomes = run_experiment(&c, 0).unwrap();
        let mut trials = Vec::new();
        write_trials_csv(&mut trials, &outcomes).unwrap();
        let mut summary = Vec::new();
        write_summary_csv(&mut summary, &summarize(&outcomes)).unwrap();
        (outcomes, trials, summary)
    };
    let (outcomes, t1, s1) = run();
    let (_, t2, s2) = run();
    assert_eq!(t1, t2);
    assert_eq!(s1, s2);

    let rows = summarize(&read_trials_csv(t1.as_slice()).unwrap());
    assert_eq!(rows.len(), c.models.len());
    for row in rows {
        let v: Vec<f64> = outcomes
            .iter()
            .filter(|o| o.model == row.model)
            .filter_map(|o| o.cvar)
            .collect();
        let mean = v.iter().sum::<f64>() / v.len() as f64;
        let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (v.len() - 1) as f64;
        assert!((row.mean - mean).abs() <= 1e-12 * (1.0 + mean.abs()));
        assert!((row.variance - var).abs() <= 1e-12 * (1.0 + var.abs()));
        assert_eq!(row.n_trials, c.trials);
        assert_eq!(row.n_trials - row.n_failed, v.len());
        for x in &v {
            assert!(x.is_finite());
        }
    }
}

#[test]
fn schema_example_parses_and_solves() {
    let doc = include_str!("../docs/schema.md");
    let start = doc.find("```json").unwrap() + "```json".len();
    let end = start + doc[start..].find("```").unwrap();
    let problem = mgdro::model::MgdroProblem::from_json(&doc[start..end]).unwrap();
    assert_eq!(problem.core_sets.len(), 2);
    let prog = mgdro::wasserstein::build_mgdro_wasserstein(&problem).unwrap();
    assert!(mgdro::conic::solve(&prog, &SolverSettings::default()).is_optimal());
}
