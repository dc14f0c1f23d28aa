//! Command-line front end: every subcommand writes one table as CSV or JSON
//! whose first line (CSV) or header fields (JSON) record the exact
//! configuration.

pub mod commands;
pub mod config;
pub mod output;

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::process::ExitCode;

use clap::Parser;

use config::{Cli, RunConfig};

pub const EXIT_OK: u8 = 0;
pub const EXIT_CONFIG: u8 = 1;
pub const EXIT_NUMERICAL: u8 = 2;

/// Parse `args`, run the command and map the result to an exit code.
/// Output is written before numerical failures are reported, so partial
/// results survive.
pub fn run<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let config = match RunConfig::from_cli(cli) {
        Ok(c) => c,
        Err(msg) => {
            eprintln!("error: {msg}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let outcome = commands::execute(&config);
    let written = match &config.out {
        Some(path) => File::create(path).and_then(|f| {
            let mut w = BufWriter::new(f);
            output::write_table(&mut w, &config, &outcome.table)?;
            w.flush()
        }),
        None => {
            let stdout = io::stdout();
            let mut w = stdout.lock();
            output::write_table(&mut w, &config, &outcome.table).and_then(|_| w.flush())
        }
    };
    if let Err(e) = written {
        eprintln!("error: cannot write output: {e}");
        return ExitCode::from(EXIT_CONFIG);
    }
    if outcome.failures.is_empty() {
        ExitCode::from(EXIT_OK)
    } else {
        for f in &outcome.failures {
            eprintln!("numerical failure: {f}");
        }
        ExitCode::from(EXIT_NUMERICAL)
    }
}
