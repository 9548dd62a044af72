use clap::Parser;

fn main() {
    let cli = abmap::Cli::parse();
    if let Err(e) = abmap::run(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
