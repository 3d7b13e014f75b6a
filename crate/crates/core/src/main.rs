mod cli;

use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    let args = cli::Cli::parse();
    match cli::run(args) {
        Ok(code) => ExitCode::from(code),
        Err(failure) => {
            eprintln!("zeta-ladder: {}", failure.message);
            ExitCode::from(failure.code)
        }
    }
}
