//! Machine files, CSV export and the `iga-machine` command line.

pub mod commands;
pub mod config;
pub mod error;
pub mod export;
pub mod format;
pub mod study;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use config::{RunConfig, RunFlags};
use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "iga-machine", version, about = "Isogeometric 2D magnetostatics of rotating machines")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a machine file; exits non-zero on any violation.
    Validate { machine: PathBuf },
    /// One coupled rotor/stator solve at the file's rotor angle.
    Solve(RunFlags),
    /// Loading-method EMF spectrum over one electrical period.
    Emf(RunFlags),
    /// Self-convergence table of the rotor magnet problem.
    Study(RunFlags),
    /// Write the bundled six-pole machine file.
    Bundled {
        #[arg(long)]
        out: PathBuf,
    },
}

pub fn execute(cmd: &Command) -> Result<commands::Report, CliError> {
    match cmd {
        Command::Validate { machine } => commands::validate(machine),
        Command::Solve(f) => commands::solve(&RunConfig::resolve(f)?),
        Command::Emf(f) => commands::emf(&RunConfig::resolve(f)?),
        Command::Study(f) => commands::study(&RunConfig::resolve(f)?),
        Command::Bundled { out } => commands::bundled(out),
    }
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli.command) {
        Ok(report) => {
            report.print();
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            println!("{}", commands::summary_line(&[("status", "error".into()), ("exit", e.exit_code().to_string())]));
            e.exit_code()
        }
    }
}
