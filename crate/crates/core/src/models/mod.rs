//! Concrete systems: the exact four-letter shift model and the numerical
//! skew product over it.

mod shift;
mod skew;

pub use shift::{shiftmodel_plaques, ShiftModel};
pub use skew::{FiberPoint, lyapunov_summary, orbit_csv, skew_orbit, LyapunovSummary, SkewOrbit, SkewSystem};

use crate::flipflop::Sign;
use crate::symbolic::SymbolWord;

/// Sign of each symbol of a four-letter word.
pub fn sign_word(x: &SymbolWord) -> Vec<Sign> {
    x.iter()
        .map(|s| if s < 2 { Sign::Plus } else { Sign::Minus })
        .collect()
}
