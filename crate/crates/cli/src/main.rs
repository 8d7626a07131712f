use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use ebx_cli::{run, Cli};

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(outcome) => {
            let mut out = std::io::stdout().lock();
            if out.write_all(outcome.stdout.as_bytes()).is_err() {
                return ExitCode::from(1);
            }
            ExitCode::from(outcome.code as u8)
        }
        Err(e) => {
            eprintln!("ebx: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
