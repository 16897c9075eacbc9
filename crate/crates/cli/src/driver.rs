//! Runs a scenario and writes its tables.

use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use bead_core::simulator::{export, Metrics, SimError, Simulation};

use crate::config::ScenarioConfig;

#[derive(Debug, Error)]
pub enum DriverError {
    /// The scenario is inconsistent with its topology.
    #[error("{0}")]
    Setup(SimError),
    #[error("writing {path}: {source}")]
    Write { path: PathBuf, source: std::io::Error },
}

/// Files written into the output directory.
pub const OUTPUTS: &[&str] =
    &["metrics.csv", "summary.csv", "erases.csv", "links.csv", "processing.csv", "manifest.txt"];

pub fn manifest(cfg: &ScenarioConfig) -> String {
    format!(
        "tool=bead {}\nseed={}\ntopology={}\nconfig_sha256={}\nnote=processing.csv holds host wall-clock times and differs between runs\n",
        env!("CARGO_PKG_VERSION"),
        cfg.sim.seed,
        cfg.topology_source,
        cfg.digest
    )
}

pub fn simulate(cfg: &ScenarioConfig) -> Result<Metrics, DriverError> {
    let sim = Simulation::new(cfg.topology.clone(), cfg.sim.clone()).map_err(DriverError::Setup)?;
    Ok(sim.into_metrics())
}

pub fn write_outputs(cfg: &ScenarioConfig, m: &Metrics, out: &Path) -> Result<(), DriverError> {
    let write = |name: &str, body: String| {
        let path = out.join(name);
        fs::write(&path, body).map_err(|source| DriverError::Write { path, source })
    };
    fs::create_dir_all(out).map_err(|source| DriverError::Write { path: out.into(), source })?;
    write("metrics.csv", export::metrics_csv(m))?;
    write("summary.csv", export::summary_csv(m))?;
    write("erases.csv", export::erases_csv(m))?;
    write("links.csv", export::links_csv(m))?;
    write("processing.csv", export::processing_csv(m))?;
    write("manifest.txt", manifest(cfg))?;
    Ok(())
}

/// `key<TAB>value` rendering of the summary table.
pub fn summary_table(m: &Metrics) -> String {
    export::summary_csv(m).lines().map(|l| l.replacen(',', "\t", 1) + "\n").collect()
}
