//! `infdiv`: batch front end for the infinitely-divisible-law toolkit.
//!
//! Artifacts go to `--out-dir`, else `$INFDIV_OUT_DIR`, else the working
//! directory. On success the written paths are printed as JSON on stdout;
//! on failure an `{"error": {"code", "message"}}` object is printed instead
//! and the exit status is 1 for I/O errors and 2 for everything else.

mod commands;
mod output;
mod source;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use serde_json::json;

use commands::Command;
use output::{error_report, exit_code, resolve_out_dir, Artifacts};

#[derive(Debug, Parser)]
#[command(name = "infdiv", version, about = "Infinitely divisible laws: evaluate, convert, invert, verify, approximate, simulate")]
struct Cli {
    /// Directory for artifacts (default: $INFDIV_OUT_DIR, else `.`).
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let out_dir = resolve_out_dir(cli.out_dir.as_deref());
    let config = cli.command.config();
    log::info!("output directory: {}", out_dir.display());
    log::info!("resolved configuration: {config}");

    let result = Artifacts::new(out_dir).and_then(|mut artifacts| {
        cli.command.run(&config, &mut artifacts)?;
        Ok(artifacts)
    });
    match result {
        Ok(artifacts) => {
            println!("{}", json!({ "artifacts": artifacts.written() }));
            ExitCode::SUCCESS
        }
        Err(e) => {
            println!("{}", error_report(&e));
            log::error!("{e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
