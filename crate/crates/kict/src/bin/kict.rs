use clap::Parser;
use kict::cli::{run, Cli};

fn main() {
    std::process::exit(run(Cli::parse()));
}
