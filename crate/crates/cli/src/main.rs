mod args;
mod commands;
mod corpus;
mod output;
mod sweep;

use clap::error::ErrorKind;
use clap::Parser;

use args::{Cli, Command};
use output::CliError;

fn run(cli: &Cli) -> output::CliResult<i32> {
    let c = &cli.common;
    match cli.command {
        Command::Flow { kind } => commands::flow(c, kind),
        Command::AaFlow => commands::aa_flow(c),
        Command::Soliton => commands::soliton(c),
        Command::AaClassify => commands::aa_classify(c),
        Command::Verify => commands::verify(c),
        Command::Sweep => commands::sweep(c),
    }
}

fn main() {
    let code = match Cli::try_parse() {
        Ok(cli) => run(&cli).unwrap_or_else(|e| {
            eprintln!("{}", e.to_json());
            1
        }),
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            0
        }
        // Exit code 2 is reserved for verify failures.
        Err(e) => {
            eprintln!("{}", CliError::new("usage", e.render().to_string().trim_end()).to_json());
            1
        }
    };
    std::process::exit(code);
}
