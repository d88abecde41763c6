use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    let cli = sage_cli::cli::Cli::parse();
    match sage_cli::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
