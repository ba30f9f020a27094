use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;
use qnet_cli::report::write_outcome;
use qnet_cli::{configure_threads, exit_code, run, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let start = Instant::now();
    let result = configure_threads(std::env::var("QG_THREADS").ok().as_deref()).and_then(|()| run(&cli));
    let mut outcome = match result {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(exit_code(&e) as u8);
        }
    };
    if cli.timing {
        outcome.report.wall_time = Some(start.elapsed().as_secs_f64());
    }
    print!("{}", outcome.report.to_json());
    if let Some(dir) = &cli.out {
        if let Err(e) = write_outcome(&outcome, dir) {
            eprintln!("error: {e}");
            return ExitCode::from(exit_code(&e) as u8);
        }
    }
    ExitCode::from(outcome.code as u8)
}
