pub mod angular;
pub mod cli;
pub mod coupling;
pub mod error;
pub mod manybody;
pub mod protocol;
pub mod rotor;
pub mod rydberg;
pub mod units;

#[cfg(test)]
mod testutil;

pub use error::{Error, Result};
