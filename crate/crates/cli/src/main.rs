use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use bead_cli::analyze;
use bead_cli::config::{parse_bytes, ScenarioConfig};
use bead_cli::driver::{self, DriverError};

const CONFIG_ERROR: u8 = 2;
const RUNTIME_ERROR: u8 = 3;

#[derive(Parser)]
#[command(name = "bead", version, about = "CCN erase simulator and calculators")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write CSV tables.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides scenario.seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides scenario.out_dir.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// History and trace-size calculators.
    Analyze {
        #[command(subcommand)]
        what: Analyze,
    },
}

#[derive(Subcommand)]
enum Analyze {
    /// Lossless history saturation time.
    Saturation {
        /// History storage, e.g. 4GiB.
        #[arg(long, value_parser = parse_bytes)]
        storage: u64,
        /// Bytes per entry, e.g. 32B.
        #[arg(long, value_parser = parse_bytes, default_value = "32B")]
        entry: u64,
        /// Insertions per second.
        #[arg(long)]
        rate: f64,
    },
    /// Bloom filter hash count, false-positive rate and saturation time.
    Bloom {
        /// Filter size, e.g. 4GiB.
        #[arg(long, value_parser = parse_bytes)]
        m: u64,
        /// Expected elements, e.g. 2e8.
        #[arg(long)]
        n: f64,
        /// Hash count to evaluate instead of the optimum.
        #[arg(long)]
        k: Option<u32>,
        #[arg(long)]
        k_max: Option<u32>,
        /// Insertions per second; adds the saturation time.
        #[arg(long)]
        rate: Option<f64>,
    },
    /// Interest-trace sizes for a tree of the given height.
    Marking {
        #[arg(long)]
        height: u32,
    },
}

fn fail(code: u8, msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("bead: {msg}");
    ExitCode::from(code)
}

fn run(config: PathBuf, seed: Option<u64>, out: Option<PathBuf>) -> ExitCode {
    let mut cfg = match ScenarioConfig::load(&config) {
        Ok(c) => c,
        Err(e) => return fail(CONFIG_ERROR, e),
    };
    if let Some(s) = seed {
        cfg.sim.seed = s;
    }
    let Some(out) = out.or_else(|| cfg.out_dir.clone()) else {
        return fail(CONFIG_ERROR, "no output directory: set scenario.out_dir or pass --out");
    };
    let metrics = match driver::simulate(&cfg) {
        Ok(m) => m,
        Err(DriverError::Setup(e)) => return fail(CONFIG_ERROR, e),
        Err(e) => return fail(RUNTIME_ERROR, e),
    };
    if let Err(e) = driver::write_outputs(&cfg, &metrics, &out) {
        return fail(RUNTIME_ERROR, e);
    }
    print!("{}", driver::summary_table(&metrics));
    ExitCode::SUCCESS
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { CONFIG_ERROR } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match cli.command {
        Command::Run { config, seed, out } => run(config, seed, out),
        Command::Analyze { what } => {
            let rows = match what {
                Analyze::Saturation { storage, entry, rate } => analyze::saturation(storage, entry, rate),
                Analyze::Bloom { m, n, k, k_max, rate } => analyze::bloom(m, n, k, k_max, rate),
                Analyze::Marking { height } => analyze::marking(height),
            };
            match rows {
                Ok(rows) => {
                    print!("{}", analyze::render(&rows));
                    ExitCode::SUCCESS
                }
                Err(e) => fail(CONFIG_ERROR, e),
            }
        }
    }
}
