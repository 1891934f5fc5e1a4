use std::io::Write;
use std::process::ExitCode;

use clap::error::ErrorKind;
use paretolab_cli::{execute, parse_config};

fn main() -> ExitCode {
    let cfg = match parse_config(std::env::args_os()) {
        Ok(cfg) => cfg,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(2),
            };
        }
    };
    match execute(cfg) {
        Ok(report) => {
            let text = serde_json::to_string_pretty(&report.summary).expect("json");
            let _ = writeln!(std::io::stdout().lock(), "{text}");
            for f in &report.files {
                eprintln!("wrote {}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
