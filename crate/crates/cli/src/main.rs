mod cli;
mod commands;
mod output;
mod parse;

use clap::Parser;

use cli::{Cli, Command};

fn main() {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    let (name, result) = match &cli.command {
        Command::State(a) => ("state", commands::state(a)),
        Command::Qfi(a) => ("qfi", commands::qfi(a)),
        Command::Optimize(a) => ("optimize", commands::optimize(a)),
        Command::Sense(a) => ("sense", commands::sense_cmd(a)),
        Command::Tomo(c) => ("tomo", commands::tomo(c)),
        Command::Fringe(a) => ("fringe", commands::fringe(a)),
    };
    let result =
        result.and_then(|o| output::finish(name, o, cli.manifest.as_deref(), !cli.no_timestamp));
    if let Err(e) = result {
        eprintln!("wgsense: {e}");
        std::process::exit(e.exit_code());
    }
}
