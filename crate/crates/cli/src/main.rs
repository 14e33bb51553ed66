use clap::Parser;

fn main() {
    std::process::exit(hypomix_cli::run(hypomix_cli::Cli::parse()));
}
