//! Genetic-algorithm search for the internal unitaries of a quantum computation.
//!
//! A computation is a fixed circuit template of trainable unitaries
//! `exp(-i p . sigma)` and input-keyed oracles. Each trainable parameter is a
//! binary chromosome, and a generational GA with rank-exponential selection
//! and segment crossover evolves a population of genomes towards the maximum
//! mean fidelity over an input-target training set.
//!
//! The [`tasks::deutsch_task`] instance is the one-bit oracle decision problem.

pub mod analysis;
pub mod error;
pub mod ga;
pub mod genome;
pub mod linalg;
pub mod tasks;

pub use error::{Error, Result};
