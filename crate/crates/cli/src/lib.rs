//! Command-line front end for the glyphline pipeline.
//!
//! Exit codes: 0 success, 1 partial failure (some inputs skipped or a stage
//! failed), 2 usage error (bad flags, missing files or models, bad config).

pub mod args;
pub mod commands;
pub mod config;
pub mod output;
pub mod scoring;

use std::fmt;

pub use args::Cli;
use args::Command;

/// An error caused by how the program was invoked.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Success,
    Partial,
}

impl Status {
    pub fn code(self) -> u8 {
        match self {
            Status::Success => 0,
            Status::Partial => 1,
        }
    }
}

pub fn error_code(err: &anyhow::Error) -> u8 {
    if err.chain().any(|e| e.is::<UsageError>()) {
        2
    } else {
        1
    }
}

/// The error chain joined with ": ", skipping causes already quoted by
/// the message above them.
pub fn describe(err: &anyhow::Error) -> String {
    let mut out = String::new();
    for cause in err.chain() {
        let msg = cause.to_string();
        if !out.contains(&msg) {
            if !out.is_empty() {
                out.push_str(": ");
            }
            out.push_str(&msg);
        }
    }
    out
}

/// Log level from `GLYPHLINE_LOG` (default `warn`).
pub fn init_logging() {
    let env = env_logger::Env::new().filter_or("GLYPHLINE_LOG", "warn");
    let _ = env_logger::Builder::from_env(env).try_init();
}

pub fn execute(cli: &Cli) -> anyhow::Result<Status> {
    let g = &cli.global;
    match &cli.command {
        Command::Run(a) => commands::cmd_run(g, a),
        Command::Stage(a) => commands::cmd_stage(g, a),
        Command::Train(a) => commands::cmd_train(g, a),
        Command::Eval(a) => commands::cmd_eval(g, a),
        Command::Synth(a) => commands::cmd_synth(g, a),
    }
}
