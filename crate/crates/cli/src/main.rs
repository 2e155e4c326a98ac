mod args;
mod commands;
mod output;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};
use commands::Failure;

fn dispatch(command: &Command) -> Result<(), Failure> {
    match command {
        Command::Kernel(a) => commands::kernel(a),
        Command::Psd(a) => commands::psd(a),
        Command::Montecarlo(a) => commands::montecarlo(a),
        Command::Moments(a) => commands::moments(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.threads {
        builder = builder.num_threads(n);
    }
    let result = match builder.build() {
        Ok(pool) => pool.install(|| dispatch(&cli.command)),
        Err(e) => Err(Failure {
            code: commands::EXIT_CONFIG,
            error: e.into(),
        }),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}
