//! Pricing and calibration core for a two-asset market without a traded
//! riskless bond, where both assets load on a common Lévy jump driver.
//!
//! The crate is `no_std` (it needs `alloc`). File formats, the Monte Carlo
//! oracle and the command line live in the `shadow-engine` crate.

#![no_std]

extern crate alloc;

pub mod error;
pub mod calibration;
pub mod closed_form;
pub mod fourier;
pub mod lattice;
pub mod levy;
pub mod math;
pub mod shadow;

pub use error::{Error, Result};
pub use levy::{LevyModel, MarketLeg, ModelKind, RiskNeutralSetup};
