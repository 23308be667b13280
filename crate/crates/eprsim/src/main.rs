use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use eprsim::{default_config_text, run_scenario, Config, RunError};

/// Worker threads for the frequency-grid loops; unset means one per core.
const THREADS_ENV: &str = "EPRSIM_THREADS";

#[derive(Parser)]
#[command(name = "eprsim", version, about = "EPR-squeezing interferometer studies")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a named scenario and write CSV curves plus manifest.json.
    Run {
        /// sensitivity, optimize-landscape, homodyne-sweep, schnupp-study,
        /// omc-sweep, loss-io, loss-symmetric, loss-asymmetric or coupled-cavity
        scenario: String,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// `section.key=value`, applied after the file is read.
        #[arg(long = "override", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Print a configuration with every default filled in.
    DefaultConfig,
}

fn thread_count() -> Result<Option<usize>, RunError> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(None),
        Ok(s) => match s.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(RunError::Config(format!("{THREADS_ENV}={s:?} is not a positive integer"))),
        },
    }
}

fn run(scenario: &str, config: &Path, out: &Path, overrides: &[String]) -> Result<(), RunError> {
    // Reject unknown names before touching the config file.
    scenario.parse::<eprsim::ScenarioName>()?;
    let cfg = Config::load(config)?.with_overrides(overrides)?;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = thread_count()? {
        pool = pool.num_threads(n);
    }
    let pool = pool.build().map_err(|e| RunError::Output(e.to_string()))?;
    let manifest = pool.install(|| run_scenario(scenario, &cfg, out))?;
    println!(
        "[{}] wrote {} files to {} in {:.2} s",
        manifest.scenario,
        manifest.files.len() + 1,
        out.display(),
        manifest.wall_time_s
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run {
            scenario,
            config,
            out,
            overrides,
        } => run(scenario, config, out, overrides),
        Command::DefaultConfig => {
            print!("{}", default_config_text());
            Ok(())
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
