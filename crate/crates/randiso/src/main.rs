use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use randiso::acceptance::{run_all, Level};
use randiso::config::{ExperimentConfig, EXPERIMENTS};
use randiso::experiments::{default_config, run};

#[derive(Parser)]
#[command(
    name = "randiso",
    about = "Random-dynamical-systems toolkit for stochastic oscillators: attractors, random periodic solutions, random isochrons, and the averaged mean-return-time system"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a named experiment from a config file (or defaults).
    Run {
        /// Experiment name; see `randiso list`.
        experiment: Option<String>,
        /// Plain-text key = value config with [section] headers.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Override the base seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the model noise intensity sigma.
        #[arg(long)]
        sigma: Option<f64>,
        /// Output directory root.
        #[arg(long, default_value = "runs")]
        out: PathBuf,
    },
    /// Run the acceptance criteria and print one pass/fail line each.
    Verify {
        #[arg(long, value_enum, default_value_t = VerifyLevel::Full)]
        level: VerifyLevel,
    },
    /// List available experiments.
    List,
}

#[derive(Clone, Copy, ValueEnum)]
enum VerifyLevel {
    Quick,
    Full,
}

fn init_threads() {
    if let Ok(v) = std::env::var("RANDISO_THREADS") {
        if let Ok(n) = v.parse::<usize>() {
            if n > 0 {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
        }
    }
}

fn main() -> ExitCode {
    init_threads();
    let cli = Cli::parse();
    match cli.command {
        Command::List => {
            for e in EXPERIMENTS {
                println!("{e}");
            }
            ExitCode::SUCCESS
        }
        Command::Verify { level } => {
            let level = match level {
                VerifyLevel::Quick => Level::Quick,
                VerifyLevel::Full => Level::Full,
            };
            let outcomes = run_all(level);
            let mut failed = false;
            for o in &outcomes {
                println!("{}", o.line());
                failed |= !o.passed;
            }
            if failed {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            }
        }
        Command::Run {
            experiment,
            config,
            seed,
            sigma,
            out,
        } => {
            let mut cfg = match (&config, &experiment) {
                (Some(path), _) => match ExperimentConfig::load(path) {
                    Ok(c) => c,
                    Err(e) => {
                        eprintln!("config error: {e}");
                        return ExitCode::from(2);
                    }
                },
                (None, Some(name)) => default_config(name),
                (None, None) => {
                    eprintln!("config error: give an experiment name or --config FILE");
                    return ExitCode::from(2);
                }
            };
            if let Some(name) = experiment {
                cfg.set("experiment", "name", name);
            }
            if let Some(s) = seed {
                cfg.sections
                    .entry("run".into())
                    .or_default()
                    .remove("seeds");
                cfg.set("run", "seed", s);
            }
            if let Some(s) = sigma {
                cfg.set("model", "sigma", s);
            }
            if let Err(e) = cfg.experiment() {
                eprintln!("config error: {e}");
                return ExitCode::from(2);
            }
            match run(&cfg, &out) {
                Ok(art) => {
                    println!("wrote {} artifacts to {}", art.files.len(), art.dir.display());
                    ExitCode::SUCCESS
                }
                Err(randiso::Error::Config(e)) => {
                    eprintln!("config error: {e}");
                    ExitCode::from(2)
                }
                Err(e) => {
                    eprintln!("run failed: {e}");
                    ExitCode::from(1)
                }
            }
        }
    }
}
