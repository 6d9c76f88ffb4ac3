use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use sgen_cli::cli::{run, Cli};
use sgen_cli::{AppError, ErrorKind};

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let err = AppError::new(ErrorKind::BadRequest, Some("args"), e.to_string().trim_end());
            eprintln!("{}", err.to_json());
            return ExitCode::from(1);
        }
    };
    let outcome = std::panic::catch_unwind(|| run(cli)).unwrap_or_else(|panic| {
        let msg = panic
            .downcast_ref::<&str>()
            .map(|s| s.to_string())
            .or_else(|| panic.downcast_ref::<String>().cloned())
            .unwrap_or_else(|| "internal error".into());
        Err(AppError::internal(msg))
    });
    match outcome {
        Ok(text) => {
            if !text.is_empty() {
                let _ = writeln!(std::io::stdout(), "{text}");
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
