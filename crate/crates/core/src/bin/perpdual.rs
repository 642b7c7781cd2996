use clap::Parser;
use perpdual::cli::{run, Cli};

fn main() {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
        }
        Err(e) => {
            println!("{}", serde_json::json!({"error": e.kind(), "message": e.to_string()}));
            std::process::exit(1);
        }
    }
}
