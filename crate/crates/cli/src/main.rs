use std::process::ExitCode;

use clap::error::ErrorKind as ClapKind;
use clap::Parser;
use nterm_cli::{configure_threads, execute, Cli, CliError, RunSpec};

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if matches!(e.kind(), ClapKind::DisplayHelp | ClapKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => return fail(CliError::usage(e.to_string().trim().to_string())),
    };
    let result = configure_threads()
        .and_then(|_| RunSpec::from_command(cli.command))
        .and_then(|spec| execute(&spec, &mut std::io::stdout().lock()));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(e),
    }
}

fn fail(e: CliError) -> ExitCode {
    eprintln!("{}", e.to_json_line());
    ExitCode::from(e.code as u8)
}
