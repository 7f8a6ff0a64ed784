use clap::Parser;
use infotape_cli::{run, Cli};

fn main() {
    let cli = Cli::parse();
    let code = match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("infotape: {e}");
            e.exit_code()
        }
    };
    std::process::exit(code);
}
