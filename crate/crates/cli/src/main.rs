use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use log::error;
use parabolic_lyapunov_cli::{run_to_dir, CliError, RunConfig, RunOutcome};

/// Build Lyapunov functionals for 1-D parabolic equations, verify them and
/// integrate flows. Exits with 0 when every enabled check passes, 1 when a
/// check fails and 2 on errors.
#[derive(Debug, Parser)]
#[command(name = "plyap", version)]
struct Args {
    /// Run configuration (TOML); repeat to run several configurations
    /// concurrently.
    #[arg(long = "config", value_name = "PATH", required = true)]
    configs: Vec<PathBuf>,
    /// Output directory; with several configurations each run writes to a
    /// subdirectory named after its file.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Build and verify the model only; skip the flow.
    #[arg(long)]
    check_only: bool,
    /// Override the seed of every configuration.
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
    /// Log progress to stderr.
    #[arg(short, long)]
    verbose: bool,
}

fn main() -> ExitCode {
    let args = Args::parse();
    env_logger::Builder::new()
        .filter_level(if args.verbose {
            log::LevelFilter::Debug
        } else {
            log::LevelFilter::Warn
        })
        .parse_default_env()
        .init();

    // Validate every configuration before running any of them.
    let mut jobs = Vec::new();
    for path in &args.configs {
        let mut cfg = match RunConfig::load(path) {
            Ok(c) => c,
            Err(e) => {
                error!("{e}");
                eprintln!("error: {e}");
                return ExitCode::from(2);
            }
        };
        if let Some(seed) = args.seed {
            cfg.seed = seed;
        }
        let dir = match (&args.out, args.configs.len()) {
            (Some(out), 1) => out.clone(),
            (Some(out), _) => out.join(path.file_stem().unwrap_or_default()),
            (None, _) => cfg.output.dir.clone(),
        };
        jobs.push((path.clone(), cfg, dir));
    }

    let results: Vec<Result<RunOutcome, CliError>> = std::thread::scope(|s| {
        let handles: Vec<_> = jobs
            .iter()
            .map(|(_, cfg, dir)| s.spawn(move || run_to_dir(cfg, dir, args.check_only)))
            .collect();
        handles.into_iter().map(|h| h.join().expect("run thread panicked")).collect()
    });

    let mut code = 0u8;
    for ((path, _, dir), result) in jobs.iter().zip(results) {
        match result {
            Ok(outcome) => {
                println!("== {} -> {}", path.display(), dir.display());
                print!("{}", outcome.summary);
                let pass = outcome.pass();
                println!("overall: {}\n", if pass { "PASS" } else { "FAIL" });
                if !pass {
                    code = code.max(1);
                }
            }
            Err(e) => {
                eprintln!("error in {}: {e}", path.display());
                code = 2;
            }
        }
    }
    ExitCode::from(code)
}
