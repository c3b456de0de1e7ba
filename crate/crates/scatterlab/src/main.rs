use std::io::Write;
use std::process::ExitCode;

use clap::Parser;

use scatterlab::cli::{run, Cli};
use scatterlab::simharness::workers_from_env;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut out = String::new();
    let result = run(cli, &mut out, workers_from_env());
    let _ = std::io::stdout().write_all(out.as_bytes());
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code as u8)
        }
    }
}
