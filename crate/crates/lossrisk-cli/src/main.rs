use clap::Parser;

fn main() {
    let cli = lossrisk_cli::Cli::parse();
    if let Err(e) = lossrisk_cli::run(cli) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
