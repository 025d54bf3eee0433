//! Benchmark cases, reference solutions, error metrics and the command line.

pub mod cases;
pub mod cli;
pub mod config;
pub mod export;
pub mod metrics;
pub mod reference;
