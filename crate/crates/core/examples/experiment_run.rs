//! Runs a config from `examples/configs` and prints the verdict.
//!
//! cargo run --release --example experiment_run -- examples/configs/circle_conjugate.toml

use std::path::PathBuf;

use rigidity::experiment::run;

fn main() {
    let config = std::env::args().nth(1).unwrap_or_else(|| "examples/configs/circle_linear.toml".into());
    let out = std::env::temp_dir().join("rigidity-example");
    match run(&PathBuf::from(&config), &out) {
        Ok(report) => {
            print!("{}", report.verdict.render());
            println!("artifacts in {}: {}", out.display(), report.artifacts.join(", "));
        }
        Err(e) => {
            eprintln!("{e}");
            std::process::exit(e.exit_code());
        }
    }
}
