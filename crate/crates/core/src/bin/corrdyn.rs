use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use corrdyn::cli::{run, Command, Config, RunOptions};

/// Numerical dynamics of holomorphic correspondences on the Riemann sphere.
///
/// Worker threads default to the available cores; set CORRDYN_THREADS to
/// override. Exit codes: 0 ok, 2 config error, 3 numeric failure,
/// 4 critical-orbit hypothesis not confirmed (with --strict).
#[derive(Parser)]
#[command(name = "corrdyn", version)]
struct Args {
    #[arg(value_enum)]
    command: Command,
    /// JSON config, or a manifest.json from an earlier run.
    #[arg(long)]
    config: PathBuf,
    /// Parent directory; each run writes into a subdirectory named by its manifest hash.
    #[arg(long)]
    out: PathBuf,
    /// Single worker thread.
    #[arg(long)]
    serial: bool,
    #[arg(long)]
    seed: Option<u64>,
    /// Exit with 4 when the critical-orbit hypothesis is not confirmed.
    #[arg(long)]
    strict: bool,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let args = Args::parse();
    let opts = RunOptions { command: args.command, out: args.out, serial: args.serial, seed: args.seed, strict: args.strict };
    let result = Config::load(&args.config).and_then(|cfg| run(cfg, &opts));
    match result {
        Ok(outcome) => {
            for line in &outcome.summary {
                println!("{line}");
            }
            println!("output: {}", outcome.dir.display());
            let code = outcome.exit_code(opts.strict);
            if code != 0 {
                eprintln!("error: critical-orbit hypothesis {:?}", outcome.manifest.hypothesis.expect("set when flagged"));
            }
            ExitCode::from(code as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
