use std::process::ExitCode;

use clap::Parser;
use gwa_cli::{execute, Cli};

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            let msg = serde_json::json!({ "error": { "kind": "Usage", "message": e.to_string(), "detail": null } });
            println!("{}", serde_json::to_string_pretty(&msg).unwrap());
            return ExitCode::from(1);
        }
    };
    let outcome = execute(&cli);
    match &outcome.out {
        Some(path) => {
            if let Err(e) = std::fs::write(path, format!("{}\n", outcome.json)) {
                let msg = serde_json::json!({ "error": { "kind": "Io", "message": format!("{}: {e}", path.display()), "detail": null } });
                println!("{}", serde_json::to_string_pretty(&msg).unwrap());
                return ExitCode::from(1);
            }
        }
        None => println!("{}", outcome.json),
    }
    ExitCode::from(outcome.code as u8)
}
