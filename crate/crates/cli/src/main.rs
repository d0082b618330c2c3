//! `curvlab` command-line front end.

mod commands;
mod config;
mod error;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{error::ErrorKind, Parser, Subcommand};

use error::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "curvlab",
    version,
    about = "Axially symmetric curvature flows, unduloid families and stability tables"
)]
struct Cli {
    /// Worker threads for parallel sweeps.
    #[arg(long, global = true, env = "CURVLAB_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Run a flow (or a cylinder stability analysis) from a scenario file.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Sample the bifurcating unduloid family.
    Bifurcation {
        #[arg(long, default_value_t = 2)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        b: usize,
        #[arg(long, default_value_t = 200)]
        samples: usize,
        #[arg(long, default_value_t = 1.0)]
        d: f64,
        /// CSV file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Exact mixed-volume stability verdicts.
    StabilityTable {
        /// Largest dimension.
        #[arg(long, default_value_t = 30)]
        n: usize,
        /// Largest mixed-volume index.
        #[arg(long, default_value_t = 12)]
        b: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Profile of one unduloid.
    Unduloid {
        #[arg(long, default_value_t = 2)]
        n: usize,
        #[arg(long)]
        s: f64,
        #[arg(long, default_value_t = 1.0)]
        d: f64,
        /// Grid nodes.
        #[arg(long, default_value_t = 257)]
        samples: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run an acceptance suite.
    Verify {
        #[arg(long, default_value = "all")]
        suite: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// JSON report file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> Result<ExitCode, CliError> {
    if let Some(t) = cli.threads {
        if t == 0 {
            return Err(CliError::Usage("--threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| CliError::Usage(format!("thread pool: {e}")))?;
    }
    match cli.cmd {
        Cmd::Simulate { config, out } => commands::simulate(&config, &out)?,
        Cmd::Bifurcation { n, b, samples, d, out } => commands::bifurcation(n, b, samples, d, out.as_deref())?,
        Cmd::StabilityTable { n, b, out } => commands::stability(n, b, out.as_deref())?,
        Cmd::Unduloid { n, s, d, samples, out } => commands::unduloid(n, s, d, samples, out.as_deref())?,
        Cmd::Verify { suite, seed, out } => {
            if !commands::verify(&suite, seed, out.as_ref())? {
                return Ok(ExitCode::FAILURE);
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            // 2 is reserved for integration failures
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::FAILURE,
            };
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
