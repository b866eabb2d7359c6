//! Command implementations behind the `ssleval` binary.

pub mod args;
pub mod commands;
mod exit;

pub use args::{Cli, Command};
pub use exit::{CommandError, ExitStatus};

use std::io::Write;

/// Runs one parsed command, writing its primary output to `out`.
pub fn run(cli: Cli, out: &mut dyn Write) -> Result<(), CommandError> {
    match cli.command {
        Command::Rank(a) => commands::rank::run(&a, out),
        Command::Cluster(a) => commands::cluster::run(&a, out),
        Command::Sweep(a) => commands::sweep::run(&a, out),
        Command::Correlate(a) => commands::correlate::run(&a, out),
        Command::Synth(a) => commands::synth::run(&a, out),
    }
}
