use std::fs::{self, File};
use std::io::{self, BufWriter};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use mgdro::datagen::write_samples_csv;
use mgdro::harness::{
    read_trials_csv, run_experiment, summarize, trial_data, write_summary_csv, write_trials_csv,
    ExperimentConfig, Tuner,
};
use mgdro::verify;

#[derive(Parser)]
#[command(
    name = "mgdro",
    version,
    about = "Multi-core-set DRO newsvendor experiments"
)]
struct Cli {
    /// JSON experiment configuration; omitted fields take their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the master seed of the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, default_value = "out")]
    out_dir: PathBuf,
    /// Worker threads for trials (0 uses every core).
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the training and evaluation samples of every trial as CSV.
    Generate,
    /// Cross-validate every model on one trial's training sample.
    Tune {
        #[arg(long, default_value_t = 0)]
        trial: usize,
    },
    /// Run all trials and write per-trial and summary CSVs.
    Run,
    /// Check the reformulations against the brute-force oracles.
    Verify,
    /// Re-aggregate a per-trial CSV into the summary table.
    Report {
        /// Per-trial CSV; defaults to the configured file inside the output directory.
        #[arg(long)]
        input: Option<PathBuf>,
    },
}

fn load_config(cli: &Cli) -> mgdro::Result<ExperimentConfig> {
    let mut config = match &cli.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = cli.seed {
        config.seed = s;
    }
    config.validate()?;
    Ok(config)
}

fn create(path: &Path) -> mgdro::Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

fn run(cli: &Cli) -> mgdro::Result<bool> {
    let config = load_config(cli)?;
    match &cli.command {
        Command::Generate => {
            fs::create_dir_all(&cli.out_dir)?;
            fs::write(cli.out_dir.join("config.json"), config.to_json()?)?;
            for t in 0..config.trials {
                let data = trial_data(&config, t)?;
                write_samples_csv(&cli.out_dir.join(format!("train_{t}.csv")), &data.train)?;
                write_samples_csv(&cli.out_dir.join(format!("test_{t}.csv")), &data.test)?;
            }
            println!(
                "wrote {} trials to {}",
                config.trials,
                cli.out_dir.display()
            );
        }
        Command::Tune { trial } => {
            let data = trial_data(&config, *trial)?;
            let mut tuner = Tuner::new(&config, &data.train, data.seed)?;
            fs::create_dir_all(&cli.out_dir)?;
            let mut wr = csv::Writer::from_writer(create(&cli.out_dir.join("tune.csv"))?);
            wr.write_record(["model", "theta", "radius"])?;
            let fmt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
            for &name in &config.models {
                let p = tuner.params(name)?;
                println!("{name}: theta={} radius={}", fmt(p.theta), fmt(p.radius));
                wr.write_record([name.to_string(), fmt(p.theta), fmt(p.radius)])?;
            }
            wr.flush()?;
        }
        Command::Run => {
            let outcomes = run_experiment(&config, cli.jobs)?;
            fs::create_dir_all(&cli.out_dir)?;
            write_trials_csv(create(&cli.out_dir.join(&config.trials_csv))?, &outcomes)?;
            let rows = summarize(&outcomes);
            write_summary_csv(create(&cli.out_dir.join(&config.summary_csv))?, &rows)?;
            write_summary_csv(io::stdout().lock(), &rows)?;
        }
        Command::Verify => {
            let checks = verify::run_all(config.seed);
            for c in &checks {
                println!("{c}");
            }
            return Ok(checks.iter().all(|c| c.passed));
        }
        Command::Report { input } => {
            let path = input
                .clone()
                .unwrap_or_else(|| cli.out_dir.join(&config.trials_csv));
            let rows = summarize(&read_trials_csv(File::open(&path)?)?);
            fs::create_dir_all(&cli.out_dir)?;
            write_summary_csv(create(&cli.out_dir.join(&config.summary_csv))?, &rows)?;
            write_summary_csv(io::stdout().lock(), &rows)?;
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
