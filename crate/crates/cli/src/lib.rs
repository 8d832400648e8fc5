//! Command-line front end for the `edm` library: database generation,
//! pairing, alignment, EDM extraction, interpolation, ROM simulation and
//! CSV reports, plus the on-disk formats they share.

// `!(x > y)` deliberately rejects NaN as well
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod grid;
#[cfg(feature = "ingest")]
pub mod ingest;
pub mod report;
pub mod store;

use std::ffi::OsString;

use clap::Parser;

/// Parses `args` (program name first) and runs the command. Returns the
/// process exit status: 0 on success, 1 on failure, 2 on usage errors.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match commands::Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .try_init();
    match commands::execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            let msg = format!("{e:#}").replace('\n', " ");
            eprintln!("error: {msg}");
            1
        }
    }
}
