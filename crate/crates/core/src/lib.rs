pub mod circuit;
pub mod cli;
pub mod error;
pub mod exact;
pub mod experiments;
pub mod meanfield;
pub mod replica;
pub mod rng;

pub use error::{Error, Result};
