use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

use bookflow_cli::{config, golden, scenario};

/// Order-book depth dynamics: run scenarios, sweep similarity shapes,
/// validate configs, and check the numbered verification suite.
#[derive(Parser)]
#[command(name = "bookflow", version, about)]
struct Cli {
    /// Output directory, overriding the config's `out_dir`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Suppress progress chatter; errors still go to stderr.
    #[arg(long, global = true)]
    quiet: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario from a config file or a built-in name.
    Run {
        /// Path to a key=value config, or a built-in scenario name.
        config: String,
    },
    /// Solve the recovery shape for zero or more speed parameters.
    Similarity {
        /// Comma-separated speed parameters, e.g. `--gamma 0,0.5,1`.
        /// Omitting the flag sweeps nothing and writes an empty summary.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        gamma: Vec<f64>,
    },
    /// Parse and check a config, reporting every problem with its line.
    Validate {
        /// Path to a key=value config, or a built-in scenario name.
        config: String,
    },
    /// Run the numbered verification checks (all by default).
    Golden {
        /// Comma-separated check numbers, e.g. `--only 1,4,7`.
        #[arg(long, value_delimiter = ',')]
        only: Vec<u32>,
    },
}

/// Resolves a config argument: an existing file wins, otherwise a built-in
/// scenario name. Returns the config text and the directory that relative
/// paths inside it resolve against.
fn resolve_config(arg: &str) -> Result<(String, PathBuf), String> {
    let path = Path::new(arg);
    if path.is_file() {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{arg}: {e}"))?;
        let base = path.parent().filter(|p| !p.as_os_str().is_empty());
        Ok((text, base.unwrap_or(Path::new(".")).to_path_buf()))
    } else if let Some(text) = scenario::builtin(arg) {
        Ok((text.to_string(), PathBuf::from(".")))
    } else {
        Err(format!(
            "`{arg}` is neither a config file nor a built-in scenario (built-ins: {})",
            scenario::builtin_names().join(", ")
        ))
    }
}

fn parse_or_report(text: &str) -> Result<config::ScenarioConfig, u8> {
    match config::parse_config(text) {
        Ok(cfg) => Ok(cfg),
        Err(errors) => {
            for e in &errors {
                eprintln!("config: {e}");
            }
            eprintln!(
                "config: {} problem{} found",
                errors.len(),
                if errors.len() == 1 { "" } else { "s" }
            );
            Err(1)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };

    let code = match cli.command {
        Command::Run { config } => {
            let (text, base) = match resolve_config(&config) {
                Ok(pair) => pair,
                Err(msg) => {
                    eprintln!("{msg}");
                    return ExitCode::from(1);
                }
            };
            match parse_or_report(&text) {
                Err(code) => code,
                Ok(mut cfg) => {
                    if let Some(out) = cli.out {
                        cfg.out_dir = out;
                    }
                    match scenario::run_scenario(&cfg, &base, cli.quiet) {
                        Ok(_) => 0,
                        Err(e) => {
                            eprintln!("run failed: {e}");
                            2
                        }
                    }
                }
            }
        }
        Command::Similarity { gamma } => {
            let out_dir = cli.out.unwrap_or_else(|| PathBuf::from("out/similarity"));
            match scenario::run_similarity_sweep(&gamma, &Default::default(), &out_dir, cli.quiet) {
                Ok(_) => 0,
                Err(e) => {
                    eprintln!("similarity sweep failed: {e}");
                    2
                }
            }
        }
        Command::Validate { config } => {
            let (text, _) = match resolve_config(&config) {
                Ok(pair) => pair,
                Err(msg) => {
                    eprintln!("{msg}");
                    return ExitCode::from(1);
                }
            };
            match parse_or_report(&text) {
                Err(code) => code,
                Ok(cfg) => {
                    if !cli.quiet {
                        println!("ok: scenario `{}` is valid", cfg.scenario);
                    }
                    0
                }
            }
        }
        Command::Golden { only } => {
            if let Some(bad) = only.iter().find(|id| **id < 1 || **id > golden::COUNT) {
                eprintln!(
                    "no check numbered {bad}; valid numbers are 1..={}",
                    golden::COUNT
                );
                1
            } else if golden::run_suite(&only, cli.quiet) {
                0
            } else {
                2
            }
        }
    };
    ExitCode::from(code)
}
