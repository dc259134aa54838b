mod args;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, ValueEnum};
use serde_json::{json, Map, Value};

use args::Command;
use run::Report;

#[derive(Parser, Debug)]
#[command(name = "regtrace", version, about = "Regularized integrals, residue traces and spectral asymptotics")]
struct Cli {
    #[command(subcommand)]
    command: Option<Command>,
    /// Replay the `inputs` of an earlier JSON output, or a bare command object.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json, global = true)]
    format: Format,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

/// Exit codes.
const OK: u8 = 0;
const CHECK_FAILED: u8 = 1;
const VALIDATION: u8 = 2;
const NUMERICAL: u8 = 3;

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(msg) = init_threads() {
        return fail(VALIDATION, &msg);
    }
    let command = match (cli.command, cli.config) {
        (_, Some(path)) => match load_config(&path) {
            Ok(c) => c,
            Err(msg) => return fail(VALIDATION, &msg),
        },
        (Some(c), None) => c,
        (None, None) => return fail(VALIDATION, "no subcommand given (see --help)"),
    };
    let command = match command.resolve() {
        Ok(c) => c,
        Err(msg) => return fail(VALIDATION, &msg),
    };
    let start = Instant::now();
    let report = match run::execute(&command) {
        Ok(r) => r,
        Err(e) => return fail(if e.is_numerical() { NUMERICAL } else { VALIDATION }, &e.to_string()),
    };
    let elapsed = start.elapsed().as_secs_f64();
    let inputs = serde_json::to_value(&command).expect("commands serialize");
    match cli.format {
        Format::Json => {
            let out = to_json(inputs, &report, elapsed);
            println!("{}", serde_json::to_string_pretty(&out).expect("report serializes"));
        }
        Format::Csv => print!("{}", to_csv(&report)),
    }
    ExitCode::from(if report.failed { CHECK_FAILED } else { OK })
}

fn fail(code: u8, msg: &str) -> ExitCode {
    eprintln!("{}", json!({ "error": msg, "exit": code }));
    ExitCode::from(code)
}

fn init_threads() -> Result<(), String> {
    let Ok(v) = std::env::var("REGTRACE_THREADS") else { return Ok(()) };
    let n: usize = v.trim().parse().map_err(|_| format!("REGTRACE_THREADS={v:?} is not a thread count"))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| e.to_string())
}

fn load_config(path: &PathBuf) -> Result<Command, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let v: Value = serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))?;
    let inputs = v.get("inputs").cloned().unwrap_or(v);
    serde_json::from_value(inputs).map_err(|e| format!("{}: not a command: {e}", path.display()))
}

fn to_json(inputs: Value, r: &Report, elapsed: f64) -> Value {
    let mut out = Map::new();
    out.insert("inputs".into(), inputs);
    if let Some(v) = r.value {
        out.insert("value".into(), json!(v));
    }
    if !r.values.is_empty() {
        out.insert("values".into(), Value::Object(r.values.clone()));
    }
    if let Some(e) = &r.expansion {
        out.insert("expansion".into(), e.clone());
    }
    out.insert("diagnostics".into(), r.diagnostics.clone());
    if let Some(s) = &r.series {
        out.insert("series".into(), json!({ "columns": s.columns, "rows": s.rows }));
    }
    out.insert("elapsed".into(), json!(elapsed));
    Value::Object(out)
}

fn to_csv(r: &Report) -> String {
    let mut out = String::new();
    if let Some(s) = &r.series {
        out.push_str(&s.columns.join(","));
        out.push('\n');
        for row in &s.rows {
            out.push_str(&row.iter().map(f64::to_string).collect::<Vec<_>>().join(","));
            out.push('\n');
        }
        return out;
    }
    let mut cols = Vec::new();
    let mut cells = Vec::new();
    if let Some(v) = r.value {
        cols.push("value".to_string());
        cells.push(v.to_string());
    }
    for (k, v) in &r.values {
        cols.push(k.clone());
        cells.push(match v {
            Value::String(s) => s.clone(),
            other => other.to_string(),
        });
    }
    out.push_str(&cols.join(","));
    out.push('\n');
    out.push_str(&cells.join(","));
    out.push('\n');
    out
}
