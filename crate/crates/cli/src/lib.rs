//! Experiment harness around the `qga` library: single runs, seeded
//! ensembles, exponential fits and figure-data reproduction.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;
