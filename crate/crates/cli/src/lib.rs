//! Command-line front end: argument parsing, artifact writing and exit codes.

pub mod args;
pub mod commands;
pub mod svg;

use std::ffi::OsString;
use std::fs;

use clap::error::ErrorKind;
use clap::Parser;
use lst_core::error::{Error, Result};
use serde_json::json;

use crate::args::{Cli, Command};
use crate::commands::{write_json, Sink};

pub const SCHEMA_VERSION: u32 = 1;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

fn report_error(kind: &str, message: &str) {
    let body = json!({ "schema_version": SCHEMA_VERSION, "kind": kind, "message": message });
    eprintln!("{body}");
}

fn exit_code(e: &Error) -> i32 {
    if e.is_validation() {
        EXIT_VALIDATION
    } else {
        EXIT_RUNTIME
    }
}

/// Parse `argv`, run the command and return the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return EXIT_OK;
        }
        Err(e) => {
            report_error("invalid-argument", e.to_string().trim());
            return EXIT_VALIDATION;
        }
    };
    match execute(&cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            report_error(e.kind(), &e.to_string());
            exit_code(&e)
        }
    }
}

fn execute(cli: &Cli) -> Result<()> {
    let g = &cli.global;
    let seed = g.seed.unwrap_or_else(|| {
        let s = rand::random::<u64>();
        log::warn!("no --seed given; using seed {s}");
        s
    });
    let threads = match g.threads {
        Some(0) => return Err(Error::InvalidArgument("--threads must be >= 1".into())),
        Some(t) => t,
        None => std::thread::available_parallelism().map_or(1, |n| n.get()),
    };
    fs::create_dir_all(&g.output_dir)?;
    let cmd = &cli.command;
    let args = match cmd {
        Command::Fit(a) => serde_json::to_value(a),
        Command::Cv(a) => serde_json::to_value(a),
        Command::Simulate(a) => serde_json::to_value(a),
        Command::Breakdown(a) => serde_json::to_value(a),
        Command::Bound(a) => serde_json::to_value(a),
        Command::Screen(a) => serde_json::to_value(a),
        Command::Metrics(a) => serde_json::to_value(a),
    }?;
    // Thread count and output location do not affect results, so they stay
    // out of the echo to keep it identical across machines.
    write_json(
        &g.output_dir.join("config.json"),
        &json!({
            "schema_version": SCHEMA_VERSION,
            "command": cmd.name(),
            "version": env!("CARGO_PKG_VERSION"),
            "seed": seed,
            "formats": g.format,
            "args": args,
        }),
    )?;
    let sink = Sink { dir: &g.output_dir, formats: &g.format };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("cannot start {threads} threads: {e}")))?;
    pool.install(|| match cmd {
        Command::Fit(a) => commands::fit(a, seed, &sink),
        Command::Cv(a) => commands::cv(a, seed, &sink),
        Command::Simulate(a) => commands::simulate(a, seed, &sink),
        Command::Breakdown(a) => commands::breakdown(a, seed, &sink),
        Command::Bound(a) => commands::bound(a, seed, &sink),
        Command::Screen(a) => commands::screen(a, seed, &sink),
        Command::Metrics(a) => commands::metrics(a, &sink),
    })
}
