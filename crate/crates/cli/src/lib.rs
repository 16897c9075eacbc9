//! Scenario loading, simulation driver and calculator tables behind the
//! `bead` binary.

pub mod analyze;
pub mod config;
pub mod driver;
