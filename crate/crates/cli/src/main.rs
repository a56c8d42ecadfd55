mod args;
mod commands;
mod fail;
mod output;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use args::{Cli, Command, ConfigFile};
use commands::{Finished, Run};
use fail::Failure;

fn configure_threads() -> Result<(), Failure> {
    let Ok(raw) = std::env::var("CROSSCURVE_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| Failure::Usage(format!("CROSSCURVE_THREADS must be a positive integer, got `{raw}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::Usage(format!("thread pool: {e}")))
}

fn run(mut cli: Cli) -> Result<Finished, Failure> {
    configure_threads()?;
    if let Some(path) = cli.config.clone() {
        args::merge(&mut cli, ConfigFile::load(&path)?);
    }
    let run = Run { seed: cli.seed.unwrap_or(0), force: cli.force };
    let finished = match &cli.command {
        Command::Verify(a) => commands::verify(a, &run)?,
        Command::Counterexample(a) => commands::counterexample(a, &run)?,
        Command::Mtw(a) => commands::mtw(a, &run)?,
        Command::Lift(a) => commands::lift(a, &run)?,
        Command::Gw(a) => commands::gw(a, &run)?,
        Command::Gh(a) => commands::gh(a, &run)?,
    };
    output::emit_json(cli.out.as_deref(), run.force, &finished.json)?;
    Ok(finished)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(2),
            };
        }
    };
    match run(cli) {
        Ok(f) => {
            eprintln!("{}: {}", if f.ok { "ok" } else { "FAILED" }, f.summary);
            if f.ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}
