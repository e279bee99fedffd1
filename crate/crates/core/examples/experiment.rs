// A reduced cross-validated experiment: a few trials, printed as the summary CSV.

use mgdro::datagen::ModelName;
use mgdro::harness::{run_experiment, summarize, write_summary_csv, ExperimentConfig};

pub fn run_example() -> mgdro::Result<String> {
    let config = ExperimentConfig {
        trials: 3,
        n_train: 40,
        n_test: 5_000,
        folds: 4,
        theta_grid: vec![1.0, 10.0, 50.0],
        radius_factors: vec![0.1, 1.0],
        models: vec![
            ModelName::Sp,
            ModelName::DroM1,
            ModelName::DroM2G2,
            ModelName::MgdroM1,
            ModelName::DroW1,
        ],
        ..ExperimentConfig::default()
    };
    let outcomes = run_experiment(&config, 0)?;
    let mut buf = Vec::new();
    write_summary_csv(&mut buf, &summarize(&outcomes))?;
    let text = String::from_utf8(buf).expect("csv is utf-8");
    print!("{text}");
    Ok(text)
}

fn main() -> mgdro::Result<()> {
    run_example().map(|_| ())
}
