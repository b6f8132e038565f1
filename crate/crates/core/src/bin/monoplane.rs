use clap::{Parser, Subcommand};
use monoplane::run::{self, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_OK, OUTPUT_ENV};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "monoplane", version, about = "Monotone planar fields: scenario runs and reports")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the scenario described by a TOML config, with optional key=value overrides.
    Run {
        config: PathBuf,
        overrides: Vec<String>,
    },
    /// Print the audit and summary table of an output directory.
    Report { dir: PathBuf },
}

/// Where to put the manifest of a config that failed to load: its `output` key if readable.
fn failure_dir(path: &Path) -> PathBuf {
    let configured = std::fs::read_to_string(path)
        .ok()
        .and_then(|t| t.parse::<toml::Table>().ok())
        .and_then(|t| t.get("output").and_then(|v| v.as_str()).map(PathBuf::from));
    configured.unwrap_or_else(|| {
        let root = std::env::var_os(OUTPUT_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("monoplane-out"));
        root.join("config_error")
    })
}

fn code(c: i32) -> ExitCode {
    ExitCode::from(c as u8)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { config, overrides } => {
            let cfg = match run::load_config(&config, &overrides) {
                Ok(cfg) => cfg,
                Err(e) => {
                    eprintln!("error: {e}");
                    let dir = failure_dir(&config);
                    if let Err(io) = run::write_config_failure(&dir, &e) {
                        eprintln!("error: could not write manifest to {}: {io}", dir.display());
                    }
                    return code(EXIT_CONFIG);
                }
            };
            match run::run(&cfg) {
                Ok(outcome) => {
                    for e in &outcome.manifest.errors {
                        eprintln!("error: {e}");
                    }
                    println!("{}", outcome.dir.display());
                    code(outcome.exit_code())
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    code(EXIT_NUMERICAL)
                }
            }
        }
        Command::Report { dir } => match run::report(&dir) {
            Ok(text) => {
                print!("{text}");
                code(EXIT_OK)
            }
            Err(e) => {
                eprintln!("error: {e}");
                code(EXIT_CONFIG)
            }
        },
    }
}
