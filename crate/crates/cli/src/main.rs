use std::io;
use std::process::ExitCode;

use clap::Parser;
use ppsolve_cli::{run, Cli, RunConfig};

fn main() -> ExitCode {
    let config = match RunConfig::try_from(Cli::parse()) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
    };
    let status = run(&config, &mut io::stdout().lock(), &mut io::stderr().lock());
    ExitCode::from(status.code() as u8)
}
