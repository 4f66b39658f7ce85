//! Configuration-driven runs: build a Lyapunov functional for a catalog
//! problem, verify it, integrate a flow and write the artifacts.

pub mod config;
pub mod run;

pub use config::RunConfig;
pub use run::{run_build, run_flow, run_to_dir, BuildOutcome, FlowOutcome, RunOutcome};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("i/o: {0}")]
    Io(String),
    #[error(transparent)]
    Core(#[from] parabolic_lyapunov::Error),
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}
