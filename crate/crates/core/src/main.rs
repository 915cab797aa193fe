use std::io;
use std::process::ExitCode;

use clap::Parser;
use framescatter::cli::{run, Cli};

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    ExitCode::from(run(cli, &mut io::stdout().lock()))
}
