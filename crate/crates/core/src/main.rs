use clap::Parser;

fn main() {
    std::process::exit(geophase::cli::main_with(geophase::cli::Cli::parse()));
}
