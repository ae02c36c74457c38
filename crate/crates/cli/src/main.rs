use std::process::ExitCode;

use berry_cli::{run, Cli, EXIT_CONFIG, THREADS_ENV};
use clap::Parser;

fn configure_threads() -> Result<(), String> {
    let Ok(value) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let threads: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| format!("{THREADS_ENV} must be a positive integer, got '{value}'"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_CONFIG as u8 } else { 0 });
        }
    };
    if let Err(msg) = configure_threads() {
        eprintln!("berry-holonomy: configuration error: {msg}");
        return ExitCode::from(EXIT_CONFIG as u8);
    }
    ExitCode::from(run(&cli) as u8)
}
