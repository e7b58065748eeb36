//! Command-line front end for the rumor-spreading experiments.
//!
//! [`run`] is the whole program minus process exit, so tests can drive it
//! in-process. Output goes to standard output or `--out`; diagnostics go to
//! standard error.

pub mod commands;
pub mod error;
pub mod spec;
pub mod table;
pub mod verify;

use std::ffi::OsString;
use std::io::Write;

use clap::Parser;

pub use commands::{execute, Outcome};
pub use error::CliError;
pub use spec::{Cli, CommandArgs, ExperimentSpec};

/// Resolves the spec for a parsed command line, loading it for `replay`.
pub fn resolve_spec(cli: &Cli) -> Result<ExperimentSpec, CliError> {
    match &cli.command {
        CommandArgs::Replay(a) => {
            let text = std::fs::read_to_string(&a.spec)
                .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", a.spec.display())))?;
            serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", a.spec.display())))
        }
        _ => cli.to_spec(),
    }
}

fn run_parsed(cli: &Cli) -> Result<Outcome, CliError> {
    let spec = resolve_spec(cli)?;
    if cli.dump_spec {
        let mut text = serde_json::to_string_pretty(&spec).expect("spec serializes");
        text.push('\n');
        return Ok(text.into());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads)
        .build()
        .map_err(|e| CliError::Runtime(format!("cannot start thread pool: {e}")))?;
    pool.install(|| execute(&spec))
}

/// Runs the program and returns its exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = if e.use_stderr() { write!(stderr, "{}", e.render()) } else { write!(stdout, "{}", e.render()) };
            return e.exit_code();
        }
    };
    let outcome = match run_parsed(&cli) {
        Ok(o) => o,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            return e.exit_code();
        }
    };
    let written = match &cli.out {
        Some(path) => std::fs::write(path, &outcome.text).map_err(|e| format!("cannot write {}: {e}", path.display())),
        None => stdout.write_all(outcome.text.as_bytes()).map_err(|e| e.to_string()),
    };
    if let Err(msg) = written {
        let _ = writeln!(stderr, "error: {msg}");
        return 1;
    }
    match outcome.failure {
        Some(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
        None => 0,
    }
}
