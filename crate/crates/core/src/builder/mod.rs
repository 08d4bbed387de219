//! Controlled points: a prefix whose regular windows outside the tail have
//! small `φ`-averages, whose tail components are dense word-fillings, and
//! whose classes along `J = ℕ ∖ R∞` follow a driving bit stream. Each build
//! comes with a certificate that [`verify_certificate`] re-derives from the
//! word alone.

mod build;
mod certificate;
mod params;
mod verify;

pub use build::build_controlled_point;
pub use certificate::{
    unpack_bits, Certificate, ComponentLevel, ItineraryRecord, LevelWindows, CERTIFICATE_FORMAT,
};
pub use params::{default_params, ControlParams};
pub use verify::{verify_certificate, Violation, VerifyReport, MAX_REPORTED_VIOLATIONS};

use serde::Serialize;
use thiserror::Error;

use crate::exact::Rational;
use crate::symbolic::SymbolWord;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BuildError {
    #[error("window {index} at level {level} has sum {sum}, outside the band α = {bound}")]
    ControlInfeasible {
        level: usize,
        index: u64,
        sum: i64,
        bound: Rational,
    },
    #[error("no word of order {order} fits a component of {size} symbols")]
    DensityInfeasible { size: u64, order: u32 },
    #[error("model refused a refinement: {0}")]
    ModelRefusal(String),
    #[error("invalid control parameters: {0}")]
    InvalidParams(String),
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error("prefix length {len} exceeds T_depth = {limit}")]
    PrefixTooLong { len: u64, limit: u64 },
    #[error("driving stream must be binary with at least {needed} bits, got {len}")]
    DrivingStream { len: usize, needed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BirkhoffPoint {
    pub length: u64,
    pub sum: i64,
    pub average: f64,
}

/// `(1/ℓ) Σ_{i<ℓ} φ(x_i)` at each checkpoint `ℓ`; checkpoints of zero or
/// beyond the word are skipped.
pub fn empirical_integral<F: Fn(u8) -> i64>(
    x: &SymbolWord,
    potential: F,
    checkpoints: &[u64],
) -> Vec<BirkhoffPoint> {
    let mut sorted: Vec<u64> = checkpoints
        .iter()
        .copied()
        .filter(|&c| c >= 1 && c <= x.len() as u64)
        .collect();
    sorted.sort_unstable();
    sorted.dedup();
    let mut out = Vec::with_capacity(sorted.len());
    let mut sum = 0i64;
    let mut i = 0u64;
    for c in sorted {
        while i < c {
            sum += potential(x.get(i as usize));
            i += 1;
        }
        out.push(BirkhoffPoint {
            length: c,
            sum,
            average: sum as f64 / c as f64,
        });
    }
    out
}
