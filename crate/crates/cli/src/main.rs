use clap::Parser;

fn main() {
    let cli = cause::cli::Cli::parse();
    if let Err(e) = cause::cli::run(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
