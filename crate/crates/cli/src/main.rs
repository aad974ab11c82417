use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

use mdlab_cli::{suite, CliError};

#[derive(Parser)]
#[command(name = "mdlab", version, about = "Moderate-deviation numerics laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment config.
    Run { config: PathBuf },
    /// Run a registered suite: `acceptance` or `demo`.
    Suite {
        name: String,
        /// Directory for the suite's data files.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the config schema as JSON.
    PrintSchema,
}

fn init_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var("MDLAB_THREADS") else {
        return Ok(());
    };
    let n: usize = v.parse().map_err(|_| CliError::Config(format!("MDLAB_THREADS = `{v}` is not a thread count")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Config(format!("thread pool: {e}")))
}

fn fail(e: CliError) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(e.exit_code() as u8)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = init_threads() {
        return fail(e);
    }
    match cli.command {
        Command::Run { config } => match mdlab_cli::run_file(&config) {
            Ok(r) => match r.failure {
                Some(f) => {
                    eprintln!("task failed: {f}");
                    ExitCode::from(1)
                }
                None => ExitCode::SUCCESS,
            },
            Err(e) => fail(e),
        },
        Command::Suite { name, out } => {
            let Some(kind) = suite::SuiteName::parse(&name) else {
                return fail(CliError::Config(format!("unknown suite `{name}`; expected `acceptance` or `demo`")));
            };
            match suite::run_suite(kind, out.as_deref(), |o| println!("{}", o.line())) {
                Ok(outcomes) => {
                    let failed: Vec<&str> = outcomes.iter().filter(|o| !o.pass).map(|o| o.id).collect();
                    if failed.is_empty() {
                        ExitCode::SUCCESS
                    } else {
                        eprintln!("failing criteria: {}", failed.join(", "));
                        ExitCode::from(1)
                    }
                }
                Err(e) => fail(e),
            }
        }
        Command::PrintSchema => {
            println!("{}", serde_json::to_string_pretty(&mdlab_cli::schema()).expect("static schema"));
            ExitCode::SUCCESS
        }
    }
}
