mod args;
mod commands;
mod config;

use std::process::ExitCode;

use clap::{CommandFactory, Parser};

use args::{Cli, Command};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad flags or settings; exit code 2.
    #[error("{0}")]
    Usage(String),
    /// Unreadable or invalid data; exit code 1.
    #[error("{0}")]
    Data(String),
    /// Failure while running; exit code 1.
    #[error("{0}")]
    Runtime(String),
    /// Gradient components over tolerance; exit code 1.
    #[error("gradient check failed: {0}")]
    GradCheck(String),
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("GWM_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => e.exit(),
    };
    let name = cli.command.name();
    let result = match cli.command {
        Command::Train(a) => commands::train(a),
        Command::Eval(a) => commands::eval(a),
        Command::Gradcheck(a) => commands::gradcheck(a),
        Command::Sweep(a) => commands::sweep(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            let mut cmd = Cli::command();
            cmd.build();
            let usage = cmd
                .find_subcommand_mut(name)
                .map(|c| c.render_usage())
                .unwrap_or_else(|| Cli::command().render_usage());
            eprintln!("error: {msg}\n\n{usage}\n\nFor more information, try 'gwm {name} --help'.");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
