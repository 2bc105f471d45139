use std::process::ExitCode;

use bjpa_cli::{run, Args};
use clap::Parser;

fn main() -> ExitCode {
    let args = Args::parse();
    match run(&args) {
        Ok(w) => {
            for f in &w.files {
                println!("{}", f.display());
            }
            println!("{}", w.manifest.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("bjpa: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
