use std::process::ExitCode;

use clap::Parser;
use uvarov::cli::{execute, Cli, ExitStatus};

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(ExitStatus::ParseError as u8)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    ExitCode::from(execute(&cli).code() as u8)
}
