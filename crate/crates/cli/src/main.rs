use clap::Parser;

use nsdicke_cli::args::Cli;
use nsdicke_cli::exit;

fn main() {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { exit::USAGE } else { exit::OK };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    let level = if cli.common.quiet {
        log::LevelFilter::Error
    } else {
        match cli.common.verbose {
            0 => log::LevelFilter::Warn,
            1 => log::LevelFilter::Info,
            _ => log::LevelFilter::Debug,
        }
    };
    env_logger::Builder::new().filter_level(level).parse_default_env().format_timestamp(None).init();
    if let Err(e) = nsdicke_cli::run(cli) {
        eprintln!("error: {e:#}");
        std::process::exit(exit::code_for(&e));
    }
}
