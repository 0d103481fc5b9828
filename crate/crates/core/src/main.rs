use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use rvp_core::config::{parse_config, RunConfig};
use rvp_core::error::{Error, Result};
use rvp_core::harness::{self, error_json, prepare_output_dir};
use rvp_core::verify::{sweep_table, verify};

const THREADS_ENV: &str = "RVP_THREADS";

#[derive(Parser)]
#[command(name = "rvp", version, about = "Particle simulator and diagnostics for the relativistic Vlasov-Poisson system")]
struct Cli {
    /// Worker threads. Falls back to RVP_THREADS, then to all cores.
    /// Results do not depend on this.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a configuration to its end time and write all artifacts.
    Run {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run the property suites at the configuration's scale.
    Verify {
        config: PathBuf,
        /// Also emit an energy-drift table under repeated dt halving.
        #[arg(long)]
        sweep: bool,
        /// Directory for verify.json (and sweep.csv).
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Continue a checkpoint to the end time in a new directory.
    Resume {
        checkpoint: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load_config(path: &Path, seed: Option<u64>) -> Result<RunConfig> {
    let text = fs::read_to_string(path)?;
    let mut cfg = parse_config(&text)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn configure_threads(flag: Option<usize>) -> Result<()> {
    let n = match flag {
        Some(n) => Some(n),
        None => match std::env::var(THREADS_ENV) {
            Ok(v) => Some(v.trim().parse::<usize>().map_err(|_| Error::Configuration(format!("{THREADS_ENV} = {v:?} is not a thread count")))?),
            Err(_) => None,
        },
    };
    if let Some(n) = n {
        if n == 0 {
            return Err(Error::Configuration("thread count must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Resource(e.to_string()))?;
    }
    Ok(())
}

fn execute(cli: Cli) -> Result<bool> {
    configure_threads(cli.threads)?;
    match cli.command {
        Command::Run { config, out, seed } => {
            let cfg = load_config(&config, seed)?;
            let dir = harness::run(&cfg, out.as_deref())?;
            println!("{}", dir.display());
            Ok(true)
        }
        Command::Resume { checkpoint, out } => {
            let dir = harness::resume(&checkpoint, out.as_deref())?;
            println!("{}", dir.display());
            Ok(true)
        }
        Command::Verify { config, sweep, out, seed } => {
            let cfg = load_config(&config, seed)?;
            if let Some(dir) = &out {
                prepare_output_dir(dir)?;
            }
            let report = verify(&cfg, sweep)?;
            for c in &report.criteria {
                eprintln!("{}", c.line());
            }
            let json = serde_json::to_string_pretty(&report)?;
            println!("{json}");
            if let Some(dir) = &out {
                fs::write(dir.join("verify.json"), &json)?;
                if let Some(rows) = &report.sweep {
                    fs::write(dir.join("sweep.csv"), sweep_table(rows))?;
                }
            }
            if let Some(rows) = &report.sweep {
                eprint!("{}", sweep_table(rows));
            }
            Ok(report.all_pass)
        }
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("{}", error_json(&e));
            ExitCode::from(2)
        }
    }
}
