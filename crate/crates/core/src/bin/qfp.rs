use std::process::ExitCode;

use clap::Parser;
use qfp_core::cli::{execute, exit_code, load_config, Cli, EXIT_CONFIG};

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: --threads: {e}");
            return ExitCode::from(EXIT_CONFIG as u8);
        }
    }
    let result = load_config(&cli).and_then(|cfg| execute(cli.command, &cfg).map(|text| (cfg, text)));
    let (cfg, text) = match result {
        Ok(v) => v,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(exit_code(&e) as u8);
        }
    };
    match &cfg.output.path {
        Some(path) => {
            if let Err(e) = std::fs::write(path, text) {
                eprintln!("error: cannot write {path}: {e}");
                return ExitCode::from(EXIT_CONFIG as u8);
            }
        }
        None => print!("{text}"),
    }
    ExitCode::SUCCESS
}
