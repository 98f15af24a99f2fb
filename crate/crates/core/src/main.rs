use clap::Parser;

fn main() {
    let cli = jelk::cli::Cli::parse();
    std::process::exit(jelk::cli::run(cli));
}
