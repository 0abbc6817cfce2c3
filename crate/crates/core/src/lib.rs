//! Direction guessing from two-qubit states with abstention.
//!
//! Builds the optimal five-outcome POVMs, realizes them as nine-step quantum
//! walks with wave-plate coins, plays the guessing game by Monte Carlo and
//! reconstructs measurements by detector tomography.

pub mod abstention;
pub mod cli;
pub mod error;
pub mod game;
pub mod hilbert;
pub mod linalg;
pub mod povm;
pub mod tomography;
pub mod walk;

pub use error::{Error, Result};
