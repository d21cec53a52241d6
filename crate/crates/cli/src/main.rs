//! `dyad`: scriptable experiments on the two-unit feedback dyad.

mod args;
mod commands;
mod output;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command, SimulateCommand};
use commands::CliError;
use output::Emitted;

fn run(cli: &Cli) -> Result<(), CliError> {
    let (report, out): (Emitted, _) = match &cli.command {
        Command::Phi(a) => (commands::cmd_phi(a)?, a.output.out.as_deref()),
        Command::Qshape(a) => (commands::cmd_qshape(a)?, a.output.out.as_deref()),
        Command::Distances(a) => (commands::cmd_distances(a)?, a.output.out.as_deref()),
        Command::Optimize(a) => (commands::cmd_optimize(a)?, a.output.out.as_deref()),
        Command::Simulate(SimulateCommand::Lindblad(a)) => (commands::cmd_lindblad(a)?, None),
        Command::Simulate(SimulateCommand::Sde(a)) => (commands::cmd_sde(a)?, None),
        Command::Qphi(a) => (commands::cmd_qphi(a)?, a.output.out.as_deref()),
    };
    report.deliver(out)
}

fn main() -> ExitCode {
    // clap exits with status 2 on usage errors and 0 for --help
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.exit_code())
        }
    }
}
