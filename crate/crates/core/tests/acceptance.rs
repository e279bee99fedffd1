// Acceptance suite. Each test prints one line per criterion (run with --nocapture to see them all).

use std::time::Instant;

use mgdro::datagen::ModelName;
use mgdro::harness::{
    mean_of, run_experiment, summarize, win_rate, write_summary_csv, write_trials_csv,
    ExperimentConfig, ModelOutcome, SummaryRow,
};
use mgdro::verify::{self, Check, Family};

const SEED: u64 = 2024;

fn report(label: &str, checks: &[Check]) -> bool {
    let ok = checks.iter().all(|c| c.passed);
    println!("[{}] {label}", if ok { "PASS" } else { "FAIL" });
    for c in checks {
        println!("    {c}");
    }
    ok
}

#[test]
fn criterion_1_moment_oracle() {
    let start = Instant::now();
    let check = verify::check_oracle_equivalence(Family::Moment, 20, 10_000, SEED);
    let secs = start.elapsed().as_secs_f64();
    let timing = Check {
        name: "runtime".into(),
        passed: secs <= 60.0,
        detail: format!("{secs:.1}s (limit 60s)"),
    };
    assert!(report(
        "criterion 1: moment oracle equivalence",
        &[check, timing]
    ));
}

#[test]
fn criterion_2_wasserstein_oracle() {
    let checks = [
        verify::check_oracle_equivalence(Family::Wasserstein, 20, 10_000, SEED),
        verify::check_sp_equivalence(SEED),
    ];
    assert!(report(
        "criterion 2: Wasserstein oracle equivalence",
        &checks
    ));
}

#[test]
fn criterion_3_certificates() {
    assert!(report(
        "criterion 3: certificate soundness",
        &[verify::check_certificates(10, 10_000, SEED)]
    ));
}

#[test]
fn criterion_4_structural_reductions() {
    let checks = [
        verify::check_core_equals_space(10, SEED),
        verify::check_theta_monotone(10, SEED),
        verify::check_sandwich(10, SEED),
    ];
    assert!(report("criterion 4: structural reductions", &checks));
}

#[test]
fn criterion_5_conjugates() {
    assert!(report(
        "criterion 5: conjugate calculus",
        &[verify::check_conjugates(100, SEED)]
    ));
}

#[test]
fn criterion_6_newsvendor() {
    assert!(report(
        "criterion 6: newsvendor identities",
        &[verify::check_newsvendor(10_000, SEED)]
    ));
}

fn claim(name: &str, passed: bool, detail: String) -> Check {
    Check {
        name: name.into(),
        passed,
        detail,
    }
}

fn row(rows: &[SummaryRow], m: ModelName) -> &SummaryRow {
    rows.iter()
        .find(|r| r.model == m)
        .expect("model in summary")
}

fn ordering_claims(outcomes: &[ModelOutcome]) -> Vec<Check> {
    use ModelName::*;
    let rows = summarize(outcomes);
    let mean = |m| mean_of(&rows, m).unwrap_or(f64::NAN);
    let (mg, sp, m2, m1) = (mean(MgdroM1), mean(Sp), mean(DroM2G2), mean(DroM1));
    let mut out = vec![claim(
        "DRO-M1 mean > 0",
        m1 > 0.0,
        format!("DRO-M1 {m1:.4}"),
    )];
    out.push(claim(
        "MGDRO-M1 < SP < DRO-M2(g2) < DRO-M1",
        mg < sp && sp < m2 && m2 < m1,
        format!("{mg:.4} < {sp:.4} < {m2:.4} < {m1:.4}"),
    ));
    let (vmg, vm1) = (row(&rows, MgdroM1).variance, row(&rows, DroM1).variance);
    out.push(claim(
        "MGDRO-M1 variance < DRO-M1 variance",
        vmg < vm1,
        format!("{vmg:.4} vs {vm1:.4}"),
    ));
    let wr = win_rate(outcomes, MgdroM1, DroM1);
    out.push(claim(
        "MGDRO-M1 beats DRO-M1 in >= 80% of trials",
        wr >= 0.8,
        format!("win rate {wr:.2}"),
    ));
    let w1 = mean(DroW1);
    out.push(claim(
        "DRO-W1 < DRO-M1",
        w1 < m1,
        format!("{w1:.4} vs {m1:.4}"),
    ));
    let mw1 = mean(MgdroW1);
    out.push(claim(
        "MGDRO-M1 <= MGDRO-W1",
        mg <= mw1,
        format!("{mg:.4} vs {mw1:.4}"),
    ));
    let failed: usize = rows.iter().map(|r| r.n_failed).sum();
    out.push(claim(
        "no failed model fits",
        failed == 0,
        format!("{failed} failures"),
    ));
    out
}

fn experiment(config: ExperimentConfig) -> Vec<ModelOutcome> {
    let config = ExperimentConfig {
        models: vec![
            ModelName::Sp,
            ModelName::DroM1,
            ModelName::DroM2G2,
            ModelName::MgdroM1,
            ModelName::DroW1,
            ModelName::MgdroW1,
        ],
        ..config
    };
    let outcomes = run_experiment(&config, 0).expect("experiment runs");
    let mut buf = Vec::new();
    write_summary_csv(&mut buf, &summarize(&outcomes)).unwrap();
    print!("{}", String::from_utf8(buf).unwrap());
    outcomes
}

#[test]
fn criterion_7_bimodal_orderings() {
    let outcomes = experiment(ExperimentConfig::default());
    assert!(report(
        "criterion 7: bimodal experiment orderings",
        &ordering_claims(&outcomes)
    ));
}

#[test]
fn criterion_7_trimodal_orderings() {
    let outcomes = experiment(ExperimentConfig::trimodal());
    assert!(report(
        "criterion 7: trimodal experiment orderings",
        &ordering_claims(&outcomes)
    ));
}

#[test]
fn criterion_8_determinism() {
    let config = ExperimentConfig {
        trials: 4,
        n_train: 40,
        n_test: 5_000,
        folds: 3,
        models: ModelName::default_suite(),
        ..ExperimentConfig::default()
    };
    let bytes = || {
        let outcomes = run_experiment(&config, 0).unwrap();
        let (mut t, mut s) = (Vec::new(), Vec::new());
        write_trials_csv(&mut t, &outcomes).unwrap();
        write_summary_csv(&mut s, &summarize(&outcomes)).unwrap();
        (t, s)
    };
    let (a, b) = (bytes(), bytes());
    let checks = [
        claim(
            "per-trial CSV identical",
            a.0 == b.0,
            format!("{} bytes", a.0.len()),
        ),
        claim(
            "summary CSV identical",
            a.1 == b.1,
            format!("{} bytes", a.1.len()),
        ),
        verify_cli_determinism(),
    ];
    assert!(report("criterion 8: determinism", &checks));
}

fn verify_cli_determinism() -> Check {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    std::fs::write(
        &cfg,
        r#"{"trials": 2, "n_train": 30, "n_test": 1000, "folds": 3, "models": ["SP", "MGDRO-M1"]}"#,
    )
    .unwrap();
    let mut outputs = Vec::new();
    for k in 0..2 {
        let out = dir.path().join(format!("run{k}"));
        let status = std::process::Command::new(env!("CARGO_BIN_EXE_mgdro"))
            .args([
                "--config",
                cfg.to_str().unwrap(),
                "--out-dir",
                out.to_str().unwrap(),
                "--seed",
                "7",
            ])
            .args(["run"])
            .output()
            .unwrap();
        assert!(status.status.success());
        let gen = std::process::Command::new(env!("CARGO_BIN_EXE_mgdro"))
            .args([
                "--config",
                cfg.to_str().unwrap(),
                "--out-dir",
                out.to_str().unwrap(),
                "--seed",
                "7",
                "generate",
            ])
            .output()
            .unwrap();
        assert!(gen.status.success());
        let files = ["trials.csv", "summary.csv", "train_0.csv", "test_1.csv"];
        outputs.push(files.map(|f| std::fs::read(out.join(f)).unwrap()));
    }
    claim(
        "CLI run and generate reproduce files",
        outputs[0] == outputs[1],
        "4 files compared".into(),
    )
}
