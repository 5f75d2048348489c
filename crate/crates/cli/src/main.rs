use clap::Parser;

fn main() {
    let cli = soa_cli::Cli::parse();
    std::process::exit(soa_cli::run(cli));
}
