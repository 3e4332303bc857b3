use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use pathgroups::cli::{execute, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli).and_then(|out| out.write()) {
        Ok(text) => {
            print!("{text}");
            std::io::stdout().flush().ok();
            ExitCode::SUCCESS
        }
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
