//! Command-line front end: configuration loading, polynomial expressions and
//! JSON reports for `gwa-core`.

pub mod commands;
pub mod config;
pub mod expr;
pub mod report;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use commands::CommandError;
use config::RunConfig;

#[derive(Parser, Debug)]
#[command(name = "gwa", version, about = "Twisted traces, positivity and star-products for generalized Weyl algebras")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Good/bad indices and the dimension of the cone of positive forms.
    Classify(Common),
    /// Trace of a polynomial (`--poly`, default 1).
    Trace(Common),
    /// Gram matrices on weight spaces (`--j`, `--deg`).
    Gram(Common),
    /// Positivity verdict with witnesses.
    Certify(Common),
    /// Star-product table summary.
    Star(Common),
    /// Twisted-identity, intertwining and membership suites.
    Selfcheck(Common),
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Configuration file.
    #[arg(short = 'i', long = "input")]
    pub input: PathBuf,
    /// Polynomial expression in z (filtered) or Z (q).
    #[arg(long)]
    pub poly: Option<String>,
    /// Single weight for `gram`; all |j| ≤ j_max otherwise.
    #[arg(long, allow_negative_numbers = true)]
    pub j: Option<i64>,
    /// Degree bound for `gram`.
    #[arg(long)]
    pub deg: Option<usize>,
    /// Write the report here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Classify(_) => "classify",
            Command::Trace(_) => "trace",
            Command::Gram(_) => "gram",
            Command::Certify(_) => "certify",
            Command::Star(_) => "star",
            Command::Selfcheck(_) => "selfcheck",
        }
    }

    fn common(&self) -> &Common {
        match self {
            Command::Classify(c)
            | Command::Trace(c)
            | Command::Gram(c)
            | Command::Certify(c)
            | Command::Star(c)
            | Command::Selfcheck(c) => c,
        }
    }
}

/// Exit status and JSON text of one invocation.
pub struct Outcome {
    pub code: i32,
    pub json: String,
    pub out: Option<PathBuf>,
}

fn error_json(kind: &str, message: String, detail: Value) -> String {
    report::to_json(&json!({ "error": { "kind": kind, "message": message, "detail": detail } })).expect("error reports serialize")
}

fn core_error(e: &gwa_core::Error) -> (i32, String) {
    let debug = format!("{e:?}");
    let kind = debug.split(['(', ' ', '{']).next().unwrap_or("Error").to_string();
    let code = if e.is_numerical() { 2 } else { 1 };
    (code, error_json(&kind, e.to_string(), Value::Null))
}

pub fn execute(cli: &Cli) -> Outcome {
    let common = cli.command.common();
    let out = common.out.clone();
    let fail = |code: i32, json: String| Outcome { code, json, out: out.clone() };
    let text = match std::fs::read_to_string(&common.input) {
        Ok(t) => t,
        Err(e) => return fail(1, error_json("Io", format!("{}: {e}", common.input.display()), Value::Null)),
    };
    let config: RunConfig = match serde_json::from_str(&text) {
        Ok(c) => c,
        Err(e) => return fail(1, error_json("Config", e.to_string(), json!({ "line": e.line(), "column": e.column() }))),
    };
    let resolved = match config.resolve() {
        Ok(r) => r,
        Err(e) => {
            let (code, json) = core_error(&e);
            return fail(code, json);
        }
    };
    let result = match &cli.command {
        Command::Classify(_) => commands::classify_cmd(&resolved),
        Command::Trace(c) => commands::trace_cmd(&resolved, c.poly.as_deref().unwrap_or("1")),
        Command::Gram(c) => commands::gram_cmd(&resolved, c.j, c.deg),
        Command::Certify(_) => commands::certify_cmd(&resolved),
        Command::Star(_) => commands::star_cmd(&resolved),
        Command::Selfcheck(_) => commands::selfcheck_cmd(&resolved),
    };
    let result = match result {
        Ok(v) => v,
        Err(CommandError::Core(e)) => {
            let (code, json) = core_error(&e);
            return fail(code, json);
        }
        Err(CommandError::Parse(e)) => return fail(1, error_json("ParseError", e.to_string(), serde_json::to_value(&e).unwrap())),
    };
    let code = if result.get("all_passed") == Some(&Value::Bool(false)) { 1 } else { 0 };
    let report = json!({
        "command": cli.command.name(),
        "arguments": { "poly": common.poly, "j": common.j, "deg": common.deg },
        "config": resolved.config,
        "relabeling": resolved.relabeling,
        "result": result,
    });
    Outcome { code, json: report::to_json(&report).expect("reports serialize"), out }
}
