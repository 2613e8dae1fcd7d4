//! Protocol engine and finite-key security calculator for generalized BB84
//! quantum key distribution, with exhaustive and Monte Carlo oracles for the
//! underlying coding, sampling and trace-distance inequalities.

pub mod bounds;
pub mod coding;
pub mod error;
pub mod gf2;
pub mod par;
pub mod protocol;
pub mod quantum;
pub mod stats;

pub use error::{Error, Result};
