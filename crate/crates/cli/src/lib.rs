//! Command-line front end for `tournament-core`.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

pub use config::{Cli, Command, Flags, Format, RunConfig};
pub use error::CliError;

/// Runs one command, writing its report. Returns the command's failure, if any,
/// after the output has been written.
pub fn run(command: &Command) -> Result<(), CliError> {
    let cfg = RunConfig::resolve(command.flags())?;
    let report = match command {
        Command::Coeffs(_) => commands::coeffs(&cfg)?,
        Command::Optimal(_) => commands::optimal(&cfg)?,
        Command::Breakpoints(_) => commands::breakpoints(&cfg)?,
        Command::Effort(_) => commands::effort(&cfg)?,
        Command::Figure1(_) => commands::figure1(&cfg)?,
        Command::Simulate(_) => commands::simulate(&cfg)?,
    };
    // figure1 uses --output as its directory; its summary goes to stdout
    let path = match command {
        Command::Figure1(_) => None,
        _ => cfg.output.as_deref(),
    };
    report.emit(cfg.format, path)?;
    match report.failure {
        Some(e) => Err(e),
        None => Ok(()),
    }
}
