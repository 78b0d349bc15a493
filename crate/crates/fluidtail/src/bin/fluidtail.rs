use clap::Parser;
use fluidtail::cli::{run, Cli};

fn main() {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(outcome) => {
            if let Err(e) = outcome.emit(&cli) {
                eprintln!("{{\"schema\":1,\"error\":\"io\",\"message\":{:?}}}", e.to_string());
                std::process::exit(2);
            }
            std::process::exit(if outcome.passed { 0 } else { 1 });
        }
        Err(e) => {
            let err = serde_json::json!({
                "schema": 1,
                "error": fluidtail::cli::error_kind(&e),
                "message": e.to_string(),
            });
            eprintln!("{err}");
            std::process::exit(2);
        }
    }
}
