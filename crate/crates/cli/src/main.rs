mod args;
mod commands;
mod error;
mod report;

use std::process::ExitCode;
use std::time::Instant;

use clap::error::ErrorKind;
use clap::Parser;
use serde_json::json;

use args::{Cli, Command};
use error::{io_err, CliError, EXIT_FAILURE, EXIT_USAGE};
use report::{combined_digest, read_report, Recorder, ReportDocument, Timings, REPORT_FILE};

const THREADS_VAR: &str = "REPGEO_THREADS";

fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var(THREADS_VAR) else {
        return Ok(());
    };
    let threads: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| CliError::Usage(format!("{THREADS_VAR} must be a positive integer, got {raw:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::Usage(format!("cannot start {threads} threads: {e}")))
}

fn execute(mut command: Command) -> Result<ReportDocument, CliError> {
    command.absolutize().map_err(io_err("."))?;
    let start = Instant::now();
    let mut rec = Recorder::new(command.out())?;
    let results = match &command {
        Command::Id(a) => commands::id(a, &mut rec)?,
        Command::Ii(a) => commands::ii(a, &mut rec)?,
        Command::Cross(a) => commands::cross(a, &mut rec)?,
        Command::Sweep(a) => commands::sweep(a, &mut rec)?,
        Command::Synth(a) => commands::synth(a, &mut rec)?,
        Command::Report(a) => commands::report(a, &mut rec)?,
        Command::Rerun(_) => return Err(CliError::Usage("a rerun cannot be recorded".into())),
    };
    let doc = ReportDocument {
        tool: env!("CARGO_PKG_NAME").into(),
        version: env!("CARGO_PKG_VERSION").into(),
        digest: combined_digest(&rec.inputs),
        parameters: command,
        inputs: rec.inputs,
        threads: rayon::current_num_threads(),
        results,
        outputs: rec.outputs,
        timings: Timings { total_seconds: start.elapsed().as_secs_f64(), steps: rec.steps },
    };
    let path = rec.out.join(REPORT_FILE);
    let text = serde_json::to_string_pretty(&doc).expect("reports serialize");
    std::fs::write(&path, text).map_err(io_err(&path))?;
    Ok(doc)
}

fn run(command: Command) -> Result<ExitCode, CliError> {
    let Command::Rerun(args) = command else {
        let name = command.name();
        let doc = execute(command)?;
        let report = doc.parameters.out().join(REPORT_FILE);
        println!("{}", json!({ "command": name, "report": report }));
        return Ok(ExitCode::SUCCESS);
    };
    let old = read_report(&args.report)?;
    let mut replay = old.parameters.clone();
    replay.set_out(args.out.clone());
    let new = execute(replay)?;
    if new.inputs != old.inputs {
        return Err(CliError::InputsChanged(format!(
            "inputs no longer match the digests recorded in {}",
            args.report.display()
        )));
    }
    let identical = new.results == old.results;
    let report = args.out.join(REPORT_FILE);
    println!("{}", json!({ "command": "rerun", "report": report, "identical": identical }));
    Ok(if identical { ExitCode::SUCCESS } else { ExitCode::from(EXIT_FAILURE as u8) })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let err = CliError::Usage(e.render().to_string().trim_end().to_owned());
            eprintln!("{}", err.to_json());
            return ExitCode::from(EXIT_USAGE as u8);
        }
    };
    match configure_threads().and_then(|_| run(cli.command)) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("{}", err.to_json());
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
