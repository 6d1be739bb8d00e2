//! European option pricing from the risk-neutral characteristic function.
//!
//! Three independent inversions are provided: the Carr–Madan FFT over a
//! log-strike grid, direct quadrature of the `P₁`/`P₂` exercise
//! probabilities, and the Fourier-cosine (COS) expansion. The analytic
//! Black–Scholes formula arbitrates between them.

mod bs;
mod carr_madan;
mod cos;
mod p1p2;

pub use bs::{bs_call_analytic, bs_put_analytic};
pub use carr_madan::{carr_madan_prices, FftBackend, FftConfig, PriceGrid};
pub use cos::{cos_price, cos_prices, cos_truncation, CosConfig};
pub use p1p2::{p1_p2_price, P1P2Settings, ProbabilityPrice};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptionKind {
    Call,
    Put,
}

impl core::str::FromStr for OptionKind {
    type Err = crate::Error;

    fn from_str(s: &str) -> crate::Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "call" | "c" => Ok(Self::Call),
            "put" | "p" => Ok(Self::Put),
            other => Err(crate::Error::InvalidInput(alloc::format!("unknown option kind {other:?}"))),
        }
    }
}

impl OptionKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Call => "call",
            Self::Put => "put",
        }
    }
}

/// Pricing route used by the calibrator and the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Fft,
    Cos,
    P1p2,
}
