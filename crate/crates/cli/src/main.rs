//! `boldrecal` command-line tool.

mod args;
mod commands;

use std::io::Write;
use std::process::ExitCode;

use boldrecal::Error;
use clap::Parser;
use serde_json::json;

use args::Cli;

fn init_logging(verbosity: u8) {
    let level = match verbosity {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    let _ = env_logger::Builder::new()
        .filter_level(level)
        .format_timestamp(None)
        .target(env_logger::Target::Stderr)
        .try_init();
}

fn error_document(err: &Error) -> serde_json::Value {
    let kind = match err {
        Error::Domain { .. } => "domain",
        Error::InvalidInput(_) => "invalid_input",
        Error::DegenerateOutcomes(_) => "degenerate_outcomes",
        Error::NonFinite { .. } => "non_finite",
        Error::DegenerateGamma => "degenerate_gamma",
        Error::Infeasible { .. } => "infeasible",
        Error::InfeasibleStart(_) => "infeasible_start",
        Error::SolverFailure(_) => "solver_failure",
        Error::Parse { .. } => "parse",
        Error::Io(_) => "io",
        Error::Csv(_) => "csv",
        Error::Json(_) => "json",
    };
    let mut doc = json!({ "error": { "kind": kind, "message": err.to_string() } });
    match err {
        Error::Infeasible { t, ceiling } => {
            doc["error"]["t"] = json!(t);
            doc["error"]["ceiling"] = json!(ceiling);
        }
        Error::Parse { row, .. } => doc["error"]["row"] = json!(row),
        Error::Domain { index, .. } => doc["error"]["index"] = json!(index),
        _ => {}
    }
    doc
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    init_logging(cli.common.verbosity);
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let doc = error_document(&err);
            let _ = writeln!(std::io::stderr(), "{doc}");
            match err {
                Error::Infeasible { .. } => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}
