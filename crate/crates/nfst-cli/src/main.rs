mod commands;
mod exit;
mod report;

use clap::Parser;

use commands::Cli;

fn main() {
    let cli = Cli::parse();
    std::process::exit(commands::execute(cli));
}
