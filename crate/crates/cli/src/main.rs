use clap::Parser;
use qfeedback_cli::error::EXIT_VALIDATION;
use qfeedback_cli::{run, Cli};

fn main() {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            std::process::exit(if e.use_stderr() { EXIT_VALIDATION } else { 0 });
        }
    };
    if let Err(e) = run(&cli) {
        eprintln!("qfeedback: {e}");
        std::process::exit(e.exit_code());
    }
}
