use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use collapse_lab::coherence::qubit_oracle;
use collapse_lab::{QubitParams, C64};
use collapse_lab_cli::{emit, load_config, run, CliError, OutputFormat};

#[derive(Parser)]
#[command(
    name = "collapse-lab",
    version,
    about = "Run measurement and coherence scenarios"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario config and write its report.
    Run {
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        shots: Option<u64>,
        /// Output file (JSON) or directory (CSV); stdout if absent.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum)]
        format: Option<Format>,
    },
    /// Check a config without running it.
    Validate { config: PathBuf },
    /// Print the closed-form qubit predictions.
    Oracle {
        #[arg(long)]
        p: f64,
        #[arg(long, allow_hyphen_values = true)]
        gamma_re: f64,
        #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
        gamma_im: f64,
        #[arg(long, allow_hyphen_values = true)]
        theta: f64,
        #[arg(long, allow_hyphen_values = true)]
        phi: f64,
    },
}

fn execute(command: Command) -> Result<(), CliError> {
    match command {
        Command::Run {
            config,
            seed,
            shots,
            out,
            format,
        } => {
            let mut scenario = load_config(&config)?;
            if let Some(seed) = seed {
                scenario.seed = seed;
            }
            if let Some(shots) = shots {
                scenario.shots = shots;
            }
            if let Some(out) = out {
                scenario.output.path = Some(out);
            }
            if let Some(format) = format {
                scenario.output.format = match format {
                    Format::Json => OutputFormat::Json,
                    Format::Csv => OutputFormat::Csv,
                };
            }
            let report = run(&scenario)?;
            emit(
                &report,
                scenario.output.format,
                scenario.output.path.as_deref(),
            )
        }
        Command::Validate { config } => {
            let scenario = load_config(&config)?;
            println!(
                "{}: valid {} scenario",
                config.display(),
                scenario.kind.name()
            );
            Ok(())
        }
        Command::Oracle {
            p,
            gamma_re,
            gamma_im,
            theta,
            phi,
        } => {
            let params = QubitParams::new(p, C64::new(gamma_re, gamma_im), theta, phi)
                .map_err(|e| CliError::validation("oracle", e))?;
            let forms = qubit_oracle(&params);
            println!(
                "{}",
                serde_json::to_string_pretty(&forms).expect("closed forms are finite")
            );
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
