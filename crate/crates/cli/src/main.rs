use std::process::ExitCode;

use clap::Parser;
use glyphline_cli::{describe, error_code, execute, init_logging, Cli};

fn main() -> ExitCode {
    // clap reports usage errors itself with exit code 2.
    let cli = Cli::parse();
    init_logging();
    match execute(&cli) {
        Ok(status) => ExitCode::from(status.code()),
        Err(e) => {
            eprintln!("error: {}", describe(&e));
            ExitCode::from(error_code(&e))
        }
    }
}
