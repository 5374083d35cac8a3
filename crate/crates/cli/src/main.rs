use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use strategic_sensors_cli::{execute_text, Overrides};

/// Stackelberg estimation experiments with strategic sensors.
#[derive(Parser)]
#[command(name = "strategic-sensors", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// Path to a flat `key = value` config file.
    config: PathBuf,
    /// Override the config's random seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the config's sample count (minimum 1000).
    #[arg(long)]
    samples: Option<usize>,
    /// Write the CSV here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment config and emit its CSV table.
    Run(RunArgs),
    /// Run a certificate-suite config; exits 3 if any suite fails.
    Certify(RunArgs),
}

fn main() {
    std::process::exit(real_main());
}

fn real_main() -> i32 {
    let cli = Cli::parse();
    let (args, certify_mode) = match cli.command {
        Command::Run(args) => (args, false),
        Command::Certify(args) => (args, true),
    };
    let text = match std::fs::read_to_string(&args.config) {
        Ok(text) => text,
        Err(e) => {
            eprintln!("error: cannot read config {}: {e}", args.config.display());
            return 2;
        }
    };
    let overrides = Overrides {
        seed: args.seed,
        samples: args.samples,
        out: args.out,
    };
    match execute_text(&text, &overrides, certify_mode) {
        Ok((rendered, out)) => {
            match out {
                Some(path) => {
                    if let Err(e) = std::fs::write(&path, rendered.csv.as_bytes()) {
                        eprintln!("error: cannot write {}: {e}", path.display());
                        return 2;
                    }
                }
                None => print!("{}", rendered.csv),
            }
            rendered.exit_code
        }
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}
