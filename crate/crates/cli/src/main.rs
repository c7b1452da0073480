use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use etc_cli::{parse_config, CommandError, Config};

#[derive(Parser)]
#[command(name = "etc", version, about = "Event-triggered control simulation and certification")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Io {
    /// Configuration file; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output file; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one closed-loop run and write its trajectory CSV.
    Simulate(Io),
    /// Run the seeded Monte-Carlo comparison and write the summary CSV.
    Bench(Io),
    /// Check the ISS certificate and the Lyapunov monitors.
    Certify(Io),
    /// Print a lower bound on the time between transmissions.
    Dwell(Io),
}

const VALIDATION: u8 = 1;
const USAGE: u8 = 2;

fn load(io: &Io) -> Result<Config, String> {
    match &io.config {
        None => Ok(Config::default()),
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
            let cfg = parse_config(&text).map_err(|e| format!("{}: {e}", path.display()))?;
            log::debug!("effective config:\n{}", cfg.serialize());
            Ok(cfg)
        }
    }
}

fn emit(io: &Io, text: &str) -> Result<(), String> {
    match &io.out {
        None => {
            let mut stdout = io::stdout().lock();
            match stdout.write_all(text.as_bytes()).and_then(|_| stdout.flush()) {
                // A closed pipe (e.g. `| head`) is not an error for the producer.
                Err(e) if e.kind() != io::ErrorKind::BrokenPipe => {
                    Err(format!("cannot write to standard output: {e}"))
                }
                _ => Ok(()),
            }
        }
        Some(path) => {
            fs::write(path, text).map_err(|e| format!("cannot write {}: {e}", path.display()))
        }
    }
}

fn run(cli: Cli) -> Result<bool, String> {
    let err = |e: CommandError| e.to_string();
    match cli.command {
        Command::Simulate(io) => {
            let cfg = load(&io)?;
            emit(&io, &etc_cli::simulate(&cfg).map_err(err)?)?;
        }
        Command::Bench(io) => {
            let cfg = load(&io)?;
            emit(&io, &etc_cli::bench(&cfg).map_err(err)?)?;
        }
        Command::Certify(io) => {
            let cfg = load(&io)?;
            let checks = etc_cli::certify(&cfg).map_err(err)?;
            let text: String = checks.iter().map(|c| c.line() + "\n").collect();
            emit(&io, &text)?;
            return Ok(checks.iter().all(|c| c.pass));
        }
        Command::Dwell(io) => {
            let cfg = load(&io)?;
            emit(&io, &etc_cli::dwell(&cfg).map_err(err)?.text())?;
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("etc: one or more checks failed");
            ExitCode::from(VALIDATION)
        }
        Err(msg) => {
            eprintln!("etc: {msg}");
            ExitCode::from(VALIDATION)
        }
    }
}
