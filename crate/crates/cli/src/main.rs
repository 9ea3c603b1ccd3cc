use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use mdl_cli::{run, Cli, CliError};

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(threads) = cli.global.threads {
        if threads == 0 {
            eprintln!("mdl: usage: --threads must be positive");
            return ExitCode::from(2);
        }
        // results are independent of the pool size, so a failure here is harmless
        let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    }
    let result = run(&cli).and_then(|text| match &cli.global.output {
        Some(path) => {
            std::fs::write(path, text).map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
        }
        None => std::io::stdout().write_all(text.as_bytes()).map_err(|e| CliError::Io(e.to_string())),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("mdl: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
