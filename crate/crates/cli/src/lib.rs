//! Experiment runner for the DTRW scheme: configuration, the Burgers
//! convergence presets, Monte Carlo validation and CSV output.

pub mod config;
pub mod experiment;
pub mod mc;
pub mod output;
