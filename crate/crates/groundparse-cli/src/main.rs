mod cmd;
mod manifest;

use clap::Parser;
use std::process::ExitCode;

/// Grounded constituency induction from the command line.
#[derive(Parser)]
#[command(name = "groundparse", version, about)]
struct Cli {
    #[command(subcommand)]
    command: cmd::Command,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cmd::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}
