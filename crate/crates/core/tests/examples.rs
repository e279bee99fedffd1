macro_rules! example {
    ($m:ident, $file:literal) => {
        #[allow(dead_code)]
        mod $m {
            include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/", $file));
        }
    };
}

example!(conic_program, "conic_program.rs");
example!(conjugates, "conjugates.rs");
example!(problem_model, "problem_model.rs");
example!(moment_dro, "moment_dro.rs");
example!(wasserstein_dro, "wasserstein_dro.rs");
example!(newsvendor, "newsvendor.rs");
example!(model_suite, "model_suite.rs");
example!(oracle_check, "oracle_check.rs");
example!(experiment, "experiment.rs");

#[test]
fn conic_program_example() {
    let d = conic_program::run_example().unwrap();
    assert!((d - 2f64.sqrt()).abs() < 1e-6);
}

#[test]
fn conjugates_example() {
    conjugates::run_example().unwrap();
}

#[test]
fn problem_model_example() {
    let json = problem_model::run_example().unwrap();
    assert!(json.contains("core_sets"));
}

#[test]
fn moment_values_are_ordered() {
    let [union, mg, dro] = moment_dro::run_example().unwrap();
    assert!(union <= mg + 1e-6);
    assert!(mg <= dro + 1e-6);
}

#[test]
fn wasserstein_example() {
    let rows = wasserstein_dro::run_example().unwrap();
    for w in rows.windows(2) {
        assert!(w[1].1 >= w[0].1 - 1e-6 && w[1].2 >= w[0].2 - 1e-6);
    }
    for (_, dro, mg) in rows {
        assert!(mg <= dro + 1e-6);
    }
}

#[test]
fn newsvendor_example() {
    let (in_sample, oos) = newsvendor::run_example().unwrap();
    assert!(in_sample < 0.0 && oos < 0.0);
}

#[test]
fn model_suite_example() {
    assert_eq!(model_suite::run_example().unwrap(), 11);
}

#[test]
fn oracle_example() {
    let (value, oracle, violation) = oracle_check::run_example().unwrap();
    assert!(oracle <= value + 1e-6 * (1.0 + value.abs()));
    assert!(violation <= 1e-5);
}

#[test]
fn experiment_example() {
    let csv = experiment::run_example().unwrap();
    assert_eq!(csv.lines().count(), 6);
}
