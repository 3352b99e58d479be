//! Command-line front end: subcommands, manifest pipeline, artifact I/O.

pub mod args;
pub mod commands;
pub mod error;
pub mod io;
pub mod pipeline;
pub mod plot;

use serde_json::{json, Value};

pub use args::{Cli, Command};
pub use error::{CliError, CliResult};

/// Caps the global worker pool at `MODASM_THREADS` when set.
pub fn configure_threads() -> CliResult<()> {
    let Ok(raw) = std::env::var("MODASM_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n >= 1)
        .ok_or_else(|| CliError::Invalid(format!("MODASM_THREADS must be a positive integer, got '{raw}'")))?;
    // a pool may already exist when called twice in one process
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

pub fn run(cli: &Cli) -> CliResult<Value> {
    match &cli.command {
        Command::Enumerate(a) => commands::enumerate(a),
        Command::Optimize(a) => commands::optimize(a),
        Command::Select(a) => commands::select(a),
        Command::Polytope(a) => commands::polytope(a),
        Command::Simulate(a) => commands::simulate_cmd(a),
        Command::Pipeline(a) => pipeline::run_pipeline(&a.manifest, a.force),
        Command::PlotData(a) => {
            let csv = plot::emit_plot_data(&a.input, &a.kind, a.every)?;
            match &a.output {
                Some(out) => {
                    let prov =
                        io::Provenance::new("plot-data", None, json!({ "kind": a.kind, "every": a.every })).input("input", &a.input)?;
                    io::write_artifact(out, csv.as_bytes(), prov)?;
                    Ok(json!({ "command": "plot-data", "kind": a.kind, "output": out }))
                }
                None => {
                    print!("{csv}");
                    Ok(Value::Null)
                }
            }
        }
    }
}
