use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use proxy_beliefs::commands::{self, Format};
use proxy_beliefs::error::CliError;
use proxy_beliefs::scenario;

#[derive(Parser)]
#[command(name = "proxy-beliefs", version)]
#[command(about = "Identify actual beliefs from conditional reports about a suitable proxy")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Text,
    Json,
    Csv,
}

impl From<FormatArg> for Format {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Text => Format::Text,
            FormatArg::Json => Format::Json,
            FormatArg::Csv => Format::Csv,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Check the proxy conditions (prior, cardinality, rank)
    Validate {
        /// Scenario file, or the name of a bundled scenario
        #[arg(long)]
        scenario: String,
    },
    /// Identify the actual belief from elicited conditionals
    Identify {
        #[arg(long)]
        scenario: String,
        #[arg(long, value_enum, default_value = "json")]
        format: FormatArg,
        /// Tolerance for negative coordinates and inconsistency
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
    },
    /// Recover the actual state-dependent utilities and rank the states
    RecoverUtility {
        #[arg(long)]
        scenario: String,
        #[arg(long, value_enum, default_value = "text")]
        format: FormatArg,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
    },
    /// Undo Grether-type updating in binary elicited conditionals
    Debias {
        #[arg(long)]
        scenario: String,
        #[arg(long, value_enum, default_value = "text")]
        format: FormatArg,
    },
    /// Compare direct elicitation with proxy identification on simulated agents
    Simulate {
        #[arg(long)]
        scenario: String,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Per-trial CSV destination (stdout if omitted)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List or print the bundled scenarios
    Scenario {
        #[command(subcommand)]
        action: ScenarioAction,
    },
}

#[derive(Subcommand)]
enum ScenarioAction {
    List,
    Show { name: String },
}

fn check_tol(tol: f64) -> Result<f64, CliError> {
    if tol > 0.0 && tol.is_finite() {
        Ok(tol)
    } else {
        Err(CliError::Usage(format!("--tol must be positive, got {tol}")))
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut stdout = std::io::stdout().lock();
    let mut emit = |text: &str| {
        stdout.write_all(text.as_bytes()).map_err(|e| CliError::Io {
            path: "<stdout>".into(),
            message: e.to_string(),
        })
    };
    match cli.command {
        Command::Validate { scenario } => {
            let v = commands::validate(&scenario::load(&scenario)?);
            emit(&v.report)?;
            if !v.passed {
                return Err(CliError::Failed("validation failed".into()));
            }
        }
        Command::Identify { scenario, format, tol } => {
            emit(&commands::identify_cmd(
                &scenario::load(&scenario)?,
                format.into(),
                check_tol(tol)?,
            )?)?;
        }
        Command::RecoverUtility { scenario, format, tol } => {
            emit(&commands::recover_utility_cmd(
                &scenario::load(&scenario)?,
                format.into(),
                check_tol(tol)?,
            )?)?;
        }
        Command::Debias { scenario, format } => {
            emit(&commands::debias_cmd(&scenario::load(&scenario)?, format.into())?)?;
        }
        Command::Simulate {
            scenario,
            trials,
            seed,
            out,
        } => {
            let table = commands::simulate(&scenario::load(&scenario)?, trials, seed)?;
            let csv = commands::simulation_csv(&table)?;
            let summary = commands::simulation_summary(&table);
            match out {
                Some(path) => {
                    commands::write_file(&path, &csv)?;
                    emit(&summary)?;
                }
                None => {
                    emit(std::str::from_utf8(&csv).unwrap_or_default())?;
                    eprint!("{summary}");
                }
            }
        }
        Command::Scenario { action } => match action {
            ScenarioAction::List => emit(&commands::scenario_list()?)?,
            ScenarioAction::Show { name } => emit(&commands::scenario_show(&name)?)?,
        },
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}: {e}", e.code());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
