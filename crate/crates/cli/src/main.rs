use std::process::ExitCode;

use fracwave_cli::{execute, parse_config, CliError, ConfigError};

fn main() -> ExitCode {
    let result = parse_config(std::env::args_os())
        .map_err(CliError::from)
        .and_then(|cfg| execute(&cfg));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Config(ConfigError::Clap(e))) => {
            let _ = e.print();
            ExitCode::from(if e.use_stderr() { 2 } else { 0 })
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
