use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use gateservo::config::ScenarioFile;
use gateservo::report::{cmd_batch, cmd_eval_rmse, cmd_rf, cmd_run, format_rmse, Overrides};
use gateservo::Error;

/// Closed-loop gate-navigation simulator.
#[derive(Parser, Debug)]
#[command(name = "gateservo", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one scenario and write trajectory.csv, metrics.json and summary.txt.
    Run {
        #[arg(long, value_name = "PATH")]
        config: PathBuf,
        #[arg(long, value_name = "N")]
        seed: Option<u64>,
        #[arg(long, value_name = "SECONDS")]
        duration: Option<f64>,
        #[arg(long, value_name = "PATH", default_value = "out")]
        out_dir: PathBuf,
    },
    /// Repeat a scenario (or its orientation sweep) and write a summary table.
    Batch {
        #[arg(long, value_name = "PATH")]
        config: PathBuf,
        #[arg(long, value_name = "N", default_value_t = 5)]
        repeats: usize,
        #[arg(long, value_name = "N")]
        seed: Option<u64>,
        #[arg(long, value_name = "SECONDS")]
        duration: Option<f64>,
        #[arg(long, value_name = "PATH", default_value = "out")]
        out_dir: PathBuf,
    },
    /// RMSE of a corner-prediction dataset.
    EvalRmse {
        /// CSV with truth and prediction columns.
        dataset: PathBuf,
    },
    /// Receptive field of a conv stack given as "kernel,stride kernel,stride ...".
    Rf { layers: String },
}

fn init_logging() {
    let env = env_logger::Env::new().filter_or("GATESERVO_LOG", "error");
    env_logger::Builder::from_env(env)
        .format_timestamp(None)
        .init();
}

fn load(path: &Path) -> Result<ScenarioFile, ExitCode> {
    ScenarioFile::load(path).map_err(|e| fail(&e))
}

fn fail(e: &Error) -> ExitCode {
    eprintln!("gateservo: error: {e}");
    ExitCode::from(1)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    init_logging();
    match dispatch(cli.command) {
        Ok(code) | Err(code) => code,
    }
}

fn dispatch(command: Command) -> Result<ExitCode, ExitCode> {
    match command {
        Command::Run {
            config,
            seed,
            duration,
            out_dir,
        } => {
            let file = load(&config)?;
            let (report, run) =
                cmd_run(&file, Overrides { seed, duration }, &out_dir).map_err(|e| fail(&e))?;
            print!(
                "{}",
                std::fs::read_to_string(&report.summary_txt).unwrap_or_default()
            );
            println!("wrote {}", out_dir.display());
            Ok(if run.metrics.crashed {
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            })
        }
        Command::Batch {
            config,
            repeats,
            seed,
            duration,
            out_dir,
        } => {
            let file = load(&config)?;
            let summary = cmd_batch(&file, repeats, Overrides { seed, duration }, &out_dir)
                .map_err(|e| fail(&e))?;
            print!("{}", summary.to_table());
            println!("wrote {}", out_dir.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::EvalRmse { dataset } => {
            let report = cmd_eval_rmse(&dataset).map_err(|e| fail(&e))?;
            print!("{}", format_rmse(&report));
            Ok(ExitCode::SUCCESS)
        }
        Command::Rf { layers } => {
            let rf = cmd_rf(&layers).map_err(|e| fail(&e))?;
            println!("{rf}");
            Ok(ExitCode::SUCCESS)
        }
    }
}
