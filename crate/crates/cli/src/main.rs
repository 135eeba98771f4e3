// SPDX-License-Identifier: MIT OR Apache-2.0

use clap::Parser;
use std::process::ExitCode;

fn main() -> ExitCode {
    let cli = attnprobe_cli::Cli::parse();
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    match attnprobe_cli::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
