use clap::Parser;

fn main() {
    std::process::exit(fps_core::cli::run(fps_core::cli::Cli::parse()));
}
