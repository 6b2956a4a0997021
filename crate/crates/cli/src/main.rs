//! `soficlab`: command-line driver for the experiments in `soficlab-core`.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use serde_json::Value;

use crate::commands::Command;
use crate::config::{envelope, flatten, merge, read_file, status_of, write_file, CliError, CliResult, Status};

#[derive(Debug, Parser)]
#[command(name = "soficlab", version, about = "Finite experiments on sofic entropy, independence and determinants")]
struct Cli {
    /// JSON file whose keys mirror the subcommand flags; flags win on conflict.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Write the JSON report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Also write the result flattened to `path,value` rows.
    #[arg(long, global = true)]
    csv: Option<PathBuf>,
    /// Worker threads (defaults to the number of cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

fn load_config(cli: &Cli) -> CliResult<Value> {
    let file = match &cli.config {
        Some(p) => Some(
            serde_json::from_str(&read_file(p)?)
                .map_err(|e| CliError::config(format!("{} is not valid JSON: {e}", p.display())))?,
        ),
        None => None,
    };
    merge(file, cli.command.flags())
}

fn write_outputs(cli: &Cli, report: &Value) -> CliResult<()> {
    let text = serde_json::to_string_pretty(report).expect("reports serialize") + "\n";
    match &cli.out {
        Some(p) => write_file(p, &text)?,
        None => print!("{text}"),
    }
    if let Some(p) = &cli.csv {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| CliError::config(format!("csv: {e}"));
        w.write_record(["path", "value"]).map_err(io)?;
        for (k, v) in flatten(&report["result"]) {
            w.write_record([k, v]).map_err(io)?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::config(format!("csv: {e}")))?;
        write_file(p, &String::from_utf8(bytes).expect("csv is utf-8"))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { Status::ConfigError.exit_code() as u8 } else { 0 });
        }
    };
    if let Some(j) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(j).build_global() {
            eprintln!("soficlab: cannot start {j} workers: {e}");
            return ExitCode::from(Status::ConfigError.exit_code() as u8);
        }
    }
    let name = cli.command.name();
    let (config, outcome) = match load_config(&cli) {
        Ok(c) => {
            let o = commands::run(name, &c);
            (c, o)
        }
        Err(e) => (cli.command.flags(), Err(e)),
    };
    let (status, report) = match outcome {
        Ok(o) => (o.status, envelope(name, &config, o.status, Some(o.result), None)),
        Err(e) => {
            let status = status_of(&e);
            eprintln!("soficlab {name}: {e}");
            (status, envelope(name, &config, status, None, Some(e.to_string())))
        }
    };
    if let Err(e) = write_outputs(&cli, &report) {
        eprintln!("soficlab: {e}");
        return ExitCode::from(Status::ConfigError.exit_code() as u8);
    }
    ExitCode::from(status.exit_code() as u8)
}
