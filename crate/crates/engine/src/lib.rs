//! File formats, the Monte Carlo oracle and the command-line front end for
//! `shadow-core`.

pub mod cli;
pub mod data_io;
pub mod error;
pub mod fft;
pub mod mc;

pub use error::{EngineError, Result};
