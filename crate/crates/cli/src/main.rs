//! `memesim`: group memes by image/text embedding similarity, annotate their
//! emotions and analyse the groups.

mod args;
mod commands;
mod error;
mod run;

use std::process::ExitCode;

use clap::Parser;

use args::Cli;
use commands::Context;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .target(env_logger::Target::Stderr)
        .init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(error::EXIT_USAGE) } else { ExitCode::SUCCESS };
        }
    };
    let out = match std::env::var_os("MEMESIM_OUT") {
        Some(v) if !v.is_empty() => v.into(),
        _ => cli.global.out.clone(),
    };
    let ctx = Context { out, stdout: cli.global.stdout, threads: cli.global.threads };
    match commands::dispatch(&ctx, cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("memesim: {} error: {e}", e.category());
            ExitCode::from(e.exit_code())
        }
    }
}
