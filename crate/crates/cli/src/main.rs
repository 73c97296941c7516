use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    lsgems_cli::main_with(&lsgems_cli::Cli::parse())
}
