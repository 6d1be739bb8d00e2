//! Numerical building blocks shared by the pricers and the calibrator.

pub mod complex;
pub mod optimize;
pub mod quad;
pub mod special;
pub mod stats;

pub use complex::C64;
