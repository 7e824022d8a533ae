use std::process::ExitCode;

use clap::Parser;
use tracing_subscriber::EnvFilter;

use jarvis_service::cli::{self, Cli, Command};

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new("info")))
        .with_writer(std::io::stderr)
        .init();
    let result = match Cli::parse().command {
        Command::Serve(a) => cli::serve(a).map(|()| true),
        Command::Ingest(a) => cli::ingest(a).map(|()| true),
        Command::Adjudicate(a) => cli::adjudicate(a).map(|()| true),
        Command::Eval(a) => cli::eval(a),
        Command::Gen(a) => cli::gen(a).map(|()| true),
        Command::Config => cli::print_default_config().map(|()| true),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
