use std::io::{ErrorKind, Write};
use std::process::ExitCode;

use clap::Parser;
use serde_json::json;
use tutorloop_cli::commands::{run, Cli};

/// Writes a line to stdout; a closed pipe (`| head`) is not an error.
fn emit(text: &str) -> ExitCode {
    let mut out = std::io::stdout().lock();
    match writeln!(out, "{text}").and_then(|_| out.flush()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.kind() == ErrorKind::BrokenPipe => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[interface.io]: {e}");
            ExitCode::FAILURE
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let json = cli.json;
    match run(cli.command) {
        Ok(out) if json => emit(&serde_json::to_string_pretty(&out.json).expect("json output")),
        Ok(out) if out.text.is_empty() => ExitCode::SUCCESS,
        Ok(out) => emit(&out.text),
        Err(e) => {
            if json {
                emit(&json!({"error": {"code": e.code(), "message": e.to_string()}}).to_string());
            } else {
                eprintln!("error[{}]: {e}", e.code());
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
