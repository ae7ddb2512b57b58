use clap::Parser;
use mbarcode::cli::{exit_code, run, Cli};

fn main() {
    let cli = Cli::parse();
    let level = match cli.options.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    if let Err(e) = run(&cli) {
        eprintln!("error: {e}");
        std::process::exit(exit_code(&e));
    }
}
