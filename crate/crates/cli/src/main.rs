use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use confheat_cli::{exit_code, resolve_file, run_and_write, Overrides};

#[derive(Parser)]
#[command(
    name = "confheat",
    version,
    about = "Heat semigroup experiments on configuration spaces"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write <prefix>.csv and <prefix>.json.
    Run {
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        replicas: Option<u64>,
        /// Output file prefix.
        #[arg(long = "out")]
        out: Option<String>,
        /// Worker threads (default: all cores).
        #[arg(long)]
        threads: Option<usize>,
        /// Override a config key, e.g. `--set t=0.25` or `--set params.dim=3`.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
    },
    /// Check a config and print it with defaults filled in.
    Validate { config: PathBuf },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Validate { config } => match resolve_file(&config, &Overrides::default()) {
            Ok(cfg) => {
                println!(
                    "{}",
                    serde_json::to_string_pretty(&cfg.to_json()).expect("config serializes")
                );
                0
            }
            Err(e) => {
                eprintln!("{e}");
                e.exit_code()
            }
        },
        Command::Run {
            config,
            seed,
            replicas,
            out,
            threads,
            set,
        } => {
            let ov = Overrides {
                seed,
                replicas,
                output: out,
                set,
            };
            match resolve_file(&config, &ov).and_then(|cfg| {
                let v = run_and_write(&cfg, threads)?;
                println!(
                    "{}: {} ({}.csv, {}.json)",
                    cfg.experiment,
                    v.as_str(),
                    cfg.output,
                    cfg.output
                );
                Ok(v)
            }) {
                Ok(v) => exit_code(v),
                Err(e) => {
                    eprintln!("error: {e}");
                    e.exit_code()
                }
            }
        }
    };
    ExitCode::from(code as u8)
}
