use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use rarefaction_lab::config::Config;
use rarefaction_lab::experiments::{build, Kind};
use rarefaction_lab::{run_experiment, validate, LabError};

#[derive(Parser)]
#[command(
    name = "rarelab",
    version,
    about = "Rarefaction-wave stability laboratory"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// `key = value` configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (created if missing).
    #[arg(long)]
    out: PathBuf,
    /// Worker threads; defaults to the number of cores.
    #[arg(long)]
    jobs: Option<usize>,
    /// Overrides the `seed` key.
    #[arg(long)]
    seed: Option<u64>,
    /// Extra `key=value` settings applied after the config file.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    Simulate(RunArgs),
    Profile(RunArgs),
    Periodic(RunArgs),
    Decompose(RunArgs),
    GnStudy(RunArgs),
    Counterexample(RunArgs),
    Rates(RunArgs),
    /// Checks a configuration without running it.
    Validate {
        #[arg(long)]
        config: PathBuf,
        /// Experiment kind; defaults to the `experiment` key.
        #[arg(long)]
        kind: Option<String>,
    },
}

fn load(path: Option<&PathBuf>, set: &[String]) -> Result<Config, LabError> {
    let mut cfg = match path {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    for kv in set {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| LabError::Config(format!("--set expects KEY=VALUE, got `{kv}`")))?;
        cfg.set(k.trim(), v.trim());
    }
    Ok(cfg)
}

fn run(kind: Kind, a: &RunArgs) -> Result<(), LabError> {
    let cfg = load(a.config.as_ref(), &a.set)?;
    let exp = build(kind, &cfg, a.seed)?;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(j) = a.jobs {
        pool = pool.num_threads(j.max(1));
    }
    let pool = pool
        .build()
        .map_err(|e| LabError::Config(format!("thread pool: {e}")))?;
    let outcome = pool.install(|| run_experiment(&exp, &a.out))?;
    println!(
        "{}: wrote {} files to {}",
        kind.name(),
        outcome.files.len() + 1,
        a.out.display()
    );
    println!("csv sha256 {}", outcome.csv_sha256);
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Simulate(a) => run(Kind::Simulate, a),
        Command::Profile(a) => run(Kind::Profile, a),
        Command::Periodic(a) => run(Kind::Periodic, a),
        Command::Decompose(a) => run(Kind::Decompose, a),
        Command::GnStudy(a) => run(Kind::GnStudy, a),
        Command::Counterexample(a) => run(Kind::Counterexample, a),
        Command::Rates(a) => run(Kind::Rates, a),
        Command::Validate { config, kind } => (|| {
            let cfg = Config::load(config)?;
            let name = match kind {
                Some(k) => k.clone(),
                None => cfg
                    .raw("experiment")
                    .map(str::to_string)
                    .ok_or_else(|| LabError::Config("no --kind and no `experiment` key".into()))?,
            };
            let kind = Kind::parse(&name)
                .ok_or_else(|| LabError::Config(format!("unknown experiment `{name}`")))?;
            let v = validate(kind, &cfg);
            if v.is_empty() {
                println!("{}: ok", config.display());
                Ok(())
            } else {
                Err(LabError::Config(v.join("\n")))
            }
        })(),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
