use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use occgrid::config::ExperimentConfig;
use occgrid::image::{read_field, write_pgm};
use occgrid::runner::{resolve_out_dir, run_experiment, selfcheck};
use occgrid::scenario::Scenario;

const EXIT_CODE_HELP: &str = "\
Exit codes:
  0  success
  1  internal or usage error
  2  config file error (reported with file and line)
  3  capacity error: a joint update exceeded the subset cap
  4  i/o or scenario/field format error
  5  inconsistent measurement: zero likelihood for every configuration";

#[derive(Parser)]
#[command(
    name = "occgrid",
    version,
    about = "Occupancy-grid estimation experiments with dependent-cell Bayesian updates",
    after_help = EXIT_CODE_HELP
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment config: generate or load the scenario, run every
    /// configured estimator over the requested trials, and write metrics.csv,
    /// error_sweep.csv, grid images, and a run manifest.
    Run {
        /// Experiment config file.
        config: PathBuf,
        /// Override the master seed from the config.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory (default: config, then $OCCGRID_OUT_DIR, then ./occgrid_out).
        #[arg(long)]
        out_dir: Option<PathBuf>,
        /// Override the trial count from the config.
        #[arg(long)]
        trials: Option<usize>,
        /// Worker threads for parallel trials (default: all cores).
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Render a saved marginal field to a PGM image, using the grid geometry
    /// of a scenario file.
    Export {
        scenario: PathBuf,
        field: PathBuf,
        out: PathBuf,
    },
    /// Cross-check the estimators against the built-in brute-force oracles.
    Selfcheck {
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
}

fn run(cli: Cli) -> Result<(), occgrid::Error> {
    match cli.command {
        Command::Run {
            config,
            seed,
            out_dir,
            trials,
            jobs,
        } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if let Some(seed) = seed {
                cfg.seed = seed;
            }
            if let Some(trials) = trials {
                cfg.trials = trials;
            }
            if let Some(jobs) = jobs {
                cfg.jobs = Some(jobs);
            }
            let out = resolve_out_dir(out_dir, &cfg);

            let run_all = || run_experiment(&cfg, &out);
            let output = match cfg.jobs {
                Some(jobs) => rayon::ThreadPoolBuilder::new()
                    .num_threads(jobs)
                    .build()
                    .map_err(|e| occgrid::Error::invalid("jobs", e.to_string()))?
                    .install(run_all),
                None => run_all(),
            }?;

            println!("wrote {}", output.out_dir.display());
            println!(
                "{:<12} {:>10} {:>10} {:>12} {:>12}",
                "method", "rho mean", "rho std", "sjsd mean", "sjsd std"
            );
            for s in &output.summaries {
                println!(
                    "{:<12} {:>10.4} {:>10.4} {:>12.4} {:>12.4}",
                    s.name, s.mean_rho, s.std_rho, s.mean_sjsd, s.std_sjsd
                );
            }
            Ok(())
        }
        Command::Export {
            scenario,
            field,
            out,
        } => {
            let scenario = Scenario::load(&scenario)?;
            let (n_x, n_y, field) = read_field(&field)?;
            if (n_x, n_y) != (scenario.grid.n_x, scenario.grid.n_y) {
                return Err(occgrid::Error::DimensionMismatch(format!(
                    "field is {}x{}, scenario grid is {}x{}",
                    n_x, n_y, scenario.grid.n_x, scenario.grid.n_y
                )));
            }
            write_pgm(&field, &scenario.grid, &out)?;
            println!("wrote {}", out.display());
            Ok(())
        }
        Command::Selfcheck { seed } => match selfcheck(seed) {
            Ok(lines) => {
                for line in lines {
                    println!("{}", line);
                }
                Ok(())
            }
            Err(message) => {
                eprintln!("selfcheck failed: {}", message);
                std::process::exit(1);
            }
        },
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {}", err);
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
