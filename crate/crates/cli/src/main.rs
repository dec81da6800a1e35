use clap::Parser;

fn main() {
    let cli = gmrfkit_cli::Cli::parse();
    if let Err(e) = gmrfkit_cli::run(cli) {
        eprintln!("{e}");
        std::process::exit(e.exit_code());
    }
}
